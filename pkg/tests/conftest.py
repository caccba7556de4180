import numpy as np
import pytest

from exvdw.atomic import EA0, PopulationState, two_level

# Rb D-line-like and Cs D-line-like two-level atoms (isotropic dipoles)
RB_OMEGA = 2.3694e15
CS_OMEGA = 2.1056e15
RB_DIPOLE = 2.99e-29
CS_DIPOLE = 2.70e-29


def rb_like(position=(0, 0, 0), isotropic=True):
    return two_level(RB_OMEGA, RB_DIPOLE, position=position, isotropic=isotropic)


def cs_like(position=(0, 0, 1e-8), isotropic=True):
    return two_level(CS_OMEGA, CS_DIPOLE, position=position, isotropic=isotropic)


def excited(species):
    return PopulationState.pure(species.n_levels, species.n_levels - 1)


def ground(species):
    return PopulationState.pure(species.n_levels, 0)


def three_level(rates=(2.0e7, 5.0e7), isotropic=False):
    """Ladder g < m < e with independent dipoles and explicit cascade rates."""
    from exvdw.atomic import AtomicSpecies, HBAR

    energies = HBAR * np.array([0.0, 2.0e15, 3.1e15])
    d = np.zeros((3, 3, 3))
    d[1, 0] = d[0, 1] = [0.0, 1.0, 3.0]
    d[2, 1] = d[1, 2] = [2.0, 0.0, 1.0]
    d[2, 0] = d[0, 2] = [0.5, 0.5, 0.0]
    d *= EA0
    r = np.zeros((3, 3))
    r[1, 0] = rates[0]
    r[2, 1] = rates[1]
    return AtomicSpecies(("g", "m", "e"), energies, d, r, isotropic=isotropic)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance criteria report: one line per criterion, shown after the run
ACCEPTANCE: dict[int, str] = {}


def record(number: int, title: str, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
