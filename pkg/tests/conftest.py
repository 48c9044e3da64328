"""Shared fixtures. Settings are read at import time, so paths are redirected first."""

import os
import tempfile
from pathlib import Path

_SCRATCH = Path(tempfile.mkdtemp(prefix="causal-alarm-rl-tests-"))
os.environ.setdefault("LOG_DIR", str(_SCRATCH / "logs"))
os.environ.setdefault("RESULTS_DIR", str(_SCRATCH / "results"))
os.environ.setdefault("DATABASE_URL", f"sqlite:///{_SCRATCH / 'runs.db'}")
os.environ.setdefault("LOG_LEVEL", "WARNING")

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from causal_alarm_rl.config import EnvConfig, RunConfig, TrainConfig  # noqa: E402
from causal_alarm_rl.core.graph import CausalGraph  # noqa: E402
from causal_alarm_rl.core.topology import Topology  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def chain_graph():
    """s0 -> s1 -> s2."""
    return CausalGraph.from_edges([(0, 1), (1, 2)], ["s0", "s1", "s2"])


@pytest.fixture
def chain_env_config():
    return EnvConfig(
        num_nodes=5,
        num_types=3,
        step_max=20,
        max_hop=1,
        alpha_range=(0.3, 0.5),
        mu_range=(0.0001, 0.0002),
        warmup_time_range=10,
        root_cause_num=3,
        count_cap=5,
        boost_scale=5.0,
    )


@pytest.fixture
def line_topology():
    """Five devices on a line."""
    A = np.zeros((5, 5), dtype=int)
    for i in range(4):
        A[i, i + 1] = A[i + 1, i] = 1
    return Topology.from_adjacency(A, max_hop=1)


@pytest.fixture
def small_run_config(tmp_path, chain_env_config):
    """A few short episodes on the 3-type chain with a tiny network."""
    return RunConfig(
        env=chain_env_config,
        train=TrainConfig(
            hidden_size=16,
            batch_size=8,
            k_epochs=2,
            ppo_update_timestep=16,
            random_sample_timestep=10,
            topk=1,
        ),
        episodes=3,
        seeds=[0],
        init_graph="random:0.3",
        truth_edge_prob=0.5,
        out_dir=tmp_path / "run",
    )
