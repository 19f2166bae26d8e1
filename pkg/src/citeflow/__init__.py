"""Citation-network analysis: graph structure, cascades, community flow and impact."""

from __future__ import annotations

__version__ = "0.1.0"
