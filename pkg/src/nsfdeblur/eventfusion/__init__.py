"""Event voxelization, encoding, and feature fusion."""

from .fusion import EventEncoder, EventFusion, event_fuse
from .voxel import N_BINS, voxelize

__all__ = ["voxelize", "N_BINS", "EventEncoder", "EventFusion", "event_fuse"]
