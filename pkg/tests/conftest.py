import numpy as np
import pytest

from saginsim.config import from_dict
from saginsim.cost import EnergyParams
from saginsim.lyapunov import LyapunovConfig, ObjectiveContext


def random_context(rng: np.random.Generator, M: int = 3, N: int = 2, unit: float = 1e6, V: float | None = None,
                   full_cover: bool = False) -> ObjectiveContext:
    """A random but feasible slot context with nonzero queues, rates and frozen allocations."""
    V = float(10 ** rng.uniform(-1, 1)) if V is None else V
    H_uav = np.round(10 ** rng.uniform(5, 8.5, M))
    H_bs = np.round(10 ** rng.uniform(4, 7.5, (M, N))) * (rng.random((M, N)) < 0.8)
    if full_cover:
        cover = tuple(tuple(range(N)) for _ in range(M))
    else:
        cover = tuple(tuple(int(n) for n in range(N) if rng.random() < 0.7) for _ in range(M))
    y_prev = np.zeros((M, N), dtype=np.int64)
    for m, ids in enumerate(cover):
        if ids and rng.random() < 0.7:
            y_prev[m, ids[rng.integers(len(ids))]] = 1
    f_bs_prev = rng.uniform(0, 2.5e9, (M, N)) * (H_bs > 0)
    return ObjectiveContext(
        H_uav=H_uav, H_bs=H_bs, hosted=np.round(rng.uniform(0, 3e8, M)),
        rate_ub=10 ** rng.uniform(6, 9, (M, N)), rate_us=10 ** rng.uniform(6, 8.5, M),
        bs_cover=cover, f_bs_max=np.full(N, 5e9), sat_share=2e9, energy=EnergyParams(),
        lyap=LyapunovConfig(V, 0.0, unit), collect=rng.uniform(0, 1e-2, M), direct=rng.uniform(0, 1, M),
        y_prev=y_prev, f_bs_prev=f_bs_prev, q_bs_plan=np.round(rng.uniform(0, 1, M) * H_uav))


@pytest.fixture
def default_cfg():
    return from_dict({})
