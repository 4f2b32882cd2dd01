"""Shared fixtures: the 8-atom reference distribution and random generators.

The reference joint law has equal-probability atoms
(1,0) (2,0) (3,0) (4,0) (2,1) (4,1) (6,1) (8,1), so the factor takes the
values 0 and 1 with probability 1/2 each, X | W=0 is uniform on {1,2,3,4}
and X | W=1 is uniform on {2,4,6,8}.  Expected values asserted against it
were recomputed through the oracles module (full atom enumeration) before
being frozen into the tests.
"""

from __future__ import annotations

import numpy as np
import pytest

from factorrisk import (
    ConditionalLawFamily,
    DiscreteJointDistribution,
    JointSample,
    StepCDF,
    from_sample,
    partition_discrete,
)

D1_ATOMS = [
    (1.0, 0.0, 0.125),
    (2.0, 0.0, 0.125),
    (3.0, 0.0, 0.125),
    (4.0, 0.0, 0.125),
    (2.0, 1.0, 0.125),
    (4.0, 1.0, 0.125),
    (6.0, 1.0, 0.125),
    (8.0, 1.0, 0.125),
]


@pytest.fixture
def d1_dist() -> DiscreteJointDistribution:
    return DiscreteJointDistribution.from_atoms(D1_ATOMS)


@pytest.fixture
def d1_sample(d1_dist) -> JointSample:
    return d1_dist.to_sample()


@pytest.fixture
def d1_family(d1_sample) -> ConditionalLawFamily:
    return from_sample(d1_sample, partition_discrete(d1_sample))


def family_of(dist: DiscreteJointDistribution) -> ConditionalLawFamily:
    sample = dist.to_sample()
    return from_sample(sample, partition_discrete(sample))


def random_discrete_dist(rng, max_atoms: int = 8, max_scenarios: int = 3,
                         span: float = 6.0) -> DiscreteJointDistribution:
    """A random small discrete joint law with every scenario populated."""
    while True:
        n_scen = int(rng.integers(1, max_scenarios + 1))
        n_atoms = int(rng.integers(n_scen, max_atoms + 1))
        assign = np.concatenate([
            np.arange(n_scen),
            rng.integers(0, n_scen, n_atoms - n_scen),
        ])
        w_vals = np.sort(rng.choice(np.arange(-3.0, 7.0), n_scen, replace=False))
        xs = np.round(rng.uniform(-span, span, n_atoms), 3)
        if np.ptp(xs) < 0.5:
            continue
        ps = rng.dirichlet(np.ones(n_atoms))
        ps = np.maximum(ps, 1e-3)
        ps = ps / ps.sum()
        return DiscreteJointDistribution(xs, w_vals[assign].reshape(-1, 1), ps)


def random_levels(rng, n: int, lo: float = 0.05, hi: float = 0.95) -> np.ndarray:
    return rng.uniform(lo, hi, n)


def scenario_laws(rng, n_scen: int, max_atoms: int = 6, span: float = 5.0):
    """Per-scenario equal-probability atom grids plus scenario weights."""
    grids = []
    for _ in range(n_scen):
        k = int(rng.integers(1, max_atoms + 1))
        grids.append(np.round(rng.uniform(-span, span, k), 3))
    pis = rng.dirichlet(np.ones(n_scen))
    pis = np.maximum(pis, 0.05)
    pis = pis / pis.sum()
    return grids, pis


def random_joint_pair(rng, max_atoms: int = 8, max_scenarios: int = 3):
    """Joint atoms (x, y, w, p): two losses over one discrete factor.

    Returns the conditional families of X, Y and X + Y on the shared
    scenario partition, all derived from the same atom enumeration.
    """
    n_scen = int(rng.integers(1, max_scenarios + 1))
    n_atoms = int(rng.integers(max(2, n_scen), max_atoms + 1))
    assign = np.concatenate([
        np.arange(n_scen),
        rng.integers(0, n_scen, n_atoms - n_scen),
    ])
    xs = np.round(rng.uniform(-5, 5, n_atoms), 3)
    ys = np.round(rng.uniform(-5, 5, n_atoms), 3)
    ps = rng.dirichlet(np.ones(n_atoms))
    ps = np.maximum(ps, 1e-3)
    ps = ps / ps.sum()
    pis = np.array([ps[assign == i].sum() for i in range(n_scen)])

    def fam(values):
        laws = tuple(
            StepCDF.from_values(values[assign == i], ps[assign == i])
            for i in range(n_scen)
        )
        return ConditionalLawFamily(pis, laws)

    return fam(xs), fam(ys), fam(xs + ys)


def random_sharing_fixture(rng, n_agents: int = 2, max_atoms: int = 8):
    """A common loss with one discrete factor per agent.

    Returns (x_law, families) where families[i] conditions the same X on
    agent i's factor; mixture identity holds by construction.
    """
    n_atoms = int(rng.integers(3, max_atoms + 1))
    xs = np.round(rng.uniform(-4, 8, n_atoms), 3)
    ps = rng.dirichlet(np.ones(n_atoms))
    ps = np.maximum(ps, 1e-3)
    ps = ps / ps.sum()
    families = []
    for _ in range(n_agents):
        n_scen = int(rng.integers(1, 4))
        assign = np.concatenate([
            np.arange(min(n_scen, n_atoms)),
            rng.integers(0, n_scen, max(0, n_atoms - n_scen)),
        ])[:n_atoms]
        pis = np.array([ps[assign == i].sum() for i in range(n_scen) if (assign == i).any()])
        laws = tuple(
            StepCDF.from_values(xs[assign == i], ps[assign == i])
            for i in range(n_scen) if (assign == i).any()
        )
        families.append(ConditionalLawFamily(pis, laws))
    x_law = StepCDF.from_values(xs, ps)
    return x_law, families


def transform_family(family: ConditionalLawFamily, func) -> ConditionalLawFamily:
    """Push every conditional law through a nondecreasing transform."""
    laws = tuple(StepCDF.from_values(func(law.support), law.masses) for law in family.laws)
    return ConditionalLawFamily(family.pis.copy(), laws, family.labels)
