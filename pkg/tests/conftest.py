import numpy as np
import pytest

from mimopower.model import LargeScaleFading, SystemConfig
from mimopower.sim import DropConfig, compute_emax, drop_users


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_instance(rng, M, K, T, edge_snr=0.1):
    """An instance with the reference drop geometry (annulus 100..500 m,
    path-loss exponent 3.76, edge-normalized units)."""
    drop_cfg = DropConfig(num_drops=1, seed=0, edge_snr_linear=edge_snr)
    fading, _ = drop_users(rng, drop_cfg, K)
    cfg = SystemConfig(M=M, K=K, T=T, tau_p=K, E_max=compute_emax(drop_cfg, T))
    return fading, cfg
