"""Synergistic potential functions on SO(3) via angular warping.

Library layout:

* :mod:`so3warp.so3` - rotation-group kernels (skew maps, Rodrigues, quaternions),
* :mod:`so3warp.potential` - the modified trace potential and its spectrum analysis,
* :mod:`so3warp.warping` - warped potential families, gain bound, critical points,
  synergy gap and the gap-optimal warping axis,
* :mod:`so3warp.controller` - the measurement-only hybrid feedback and smooth baseline,
* :mod:`so3warp.simulator` - fixed-step hybrid closed-loop execution,
* :mod:`so3warp.scenario` / :mod:`so3warp.trajectory` - scenario files and CSV logs,
* :mod:`so3warp.verify` - randomized oracle suites,
* :mod:`so3warp.cli` - the ``so3warp`` command-line front end.
"""

__version__ = "0.1.0"
