"""Process-level allocator tuning for training loops.

The tape keeps large activation arrays alive through each step; with glibc's
defaults every step mmaps and munmaps hundreds of megabytes, and the page
faults dominate. Raising the mmap threshold and disabling trim keeps freed
blocks on the heap for reuse.
"""

from __future__ import annotations

import ctypes
import ctypes.util

_done = False

_M_TRIM_THRESHOLD = -1
_M_MMAP_THRESHOLD = -3


def enable_malloc_reuse() -> None:
    global _done
    if _done:
        return
    _done = True
    try:
        libc = ctypes.CDLL(ctypes.util.find_library("c"), use_errno=True)
        libc.mallopt(_M_MMAP_THRESHOLD, 1 << 30)
        libc.mallopt(_M_TRIM_THRESHOLD, 1 << 30)
    except (OSError, AttributeError, TypeError):
        pass  # not glibc; harmless to skip
