"""Shared fixtures: real experiment outputs produced through the repde CLI.

The figures package consumes the primary tool only through its external
interfaces, so these fixtures shell out to `repde` with bundled config
names and collect the resulting directories.
"""

import shutil
import subprocess

import pytest


def run_repde(*args) -> None:
    exe = shutil.which("repde")
    if exe is None:
        pytest.skip("repde CLI not installed")
    proc = subprocess.run([exe, *args], capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"repde {' '.join(args)} failed:\n{proc.stderr}")


@pytest.fixture(scope="session")
def experiment_dir(tmp_path_factory):
    """Output of the algebraic growth-law experiment."""
    out = tmp_path_factory.mktemp("experiment")
    run_repde("run", "--config", "algebraic_n1_g4", "--out", str(out))
    return out


@pytest.fixture(scope="session")
def sweep_dir(tmp_path_factory):
    """Output of the decay-exponent sweep."""
    out = tmp_path_factory.mktemp("sweep")
    run_repde(
        "sweep",
        "--config",
        "algebraic_sweep_base",
        "--param",
        "gamma",
        "--values",
        "2,3,4",
        "--out",
        str(out),
    )
    return out


@pytest.fixture(scope="session")
def convergence_dir(tmp_path_factory):
    """Output of the exact-solution refinement study."""
    out = tmp_path_factory.mktemp("convergence")
    run_repde(
        "converge", "--config", "separable_convergence", "--levels", "3",
        "--out", str(out),
    )
    return out
