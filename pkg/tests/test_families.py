import math

import numpy as np
import pytest

from alphaproj import (
    ExpFamilySpec,
    LinearFamilySpec,
    OutOfDomain,
    alpha_mixture,
    constraint_residual,
    example_family,
    exp_family_member,
    fit_theta,
    make_distribution,
    orthogonalize,
    uniform,
)
from alphaproj.families import cone_support
from alphaproj.instances import random_distribution, random_exp_family, random_family
from alphaproj.oracle import family_support_by_vertices, sample_family_members

L4 = ["1", "2", "3", "4"]
U4 = uniform(L4)
F_RAW = np.array([1.0, -3.0, -5.0, -6.0])
P_STAR = make_distribution(L4, [0.9, 0.1, 0, 0])
P_KNOWN_MEMBER = make_distribution(L4, [0.984688, 0.005683, 0.004180, 0.005449], normalize=True)


def test_orthogonalize_examples():
    assert np.allclose(orthogonalize([[1, 0], [0, 2]]), [[1, 0], [0, 1]], atol=1e-16)
    r = 1 / math.sqrt(2)
    assert np.allclose(orthogonalize([[1, 1], [1, -1]]), [[r, r], [r, -r]], atol=1e-16)
    assert orthogonalize([[1, 0, 0], [1, 1e-14, 0]]).shape == (1, 3)
    with pytest.raises(ValueError):
        orthogonalize([[0, 0], [0, 0]])


def test_orthonormal_basis(rng):
    V = rng.standard_normal((3, 6))
    B = orthogonalize(V)
    assert np.allclose(B @ B.T, np.eye(3), atol=1e-14)
    # same span: projecting V on the basis loses nothing
    assert np.allclose(V - (V @ B.T) @ B, 0, atol=1e-12)


def test_constraint_residual_examples():
    fam = example_family(0.5)
    # zero in exact arithmetic (sqrt(0.9) == 3 sqrt(0.1)); round-off only here
    assert abs(constraint_residual(P_STAR, fam)[0]) <= 1e-16
    assert abs(constraint_residual(P_KNOWN_MEMBER, fam)[0]) <= 1e-5
    assert constraint_residual(U4, fam)[0] == pytest.approx(-6.5 / math.sqrt(71), abs=1e-14)
    assert fam.contains(P_STAR)
    assert not fam.contains(U4)


def test_family_validation():
    with pytest.raises(ValueError):
        LinearFamilySpec(0.5, L4, np.eye(4))
    with pytest.raises(ValueError):
        LinearFamilySpec(0, L4, [F_RAW])
    with pytest.raises(ValueError):
        LinearFamilySpec(math.inf, L4, [F_RAW])
    free = LinearFamilySpec(2.0, L4, [])
    assert free.n_constraints == 0 and free.support_mask.all()


def test_json_and_generator_forms():
    fam = example_family(0.5)
    back = LinearFamilySpec.from_json(fam.to_json())
    assert np.array_equal(back.basis, fam.basis)
    gen = LinearFamilySpec.from_json(
        {"alpha": 0.5, "alphabet": L4, "generators": fam.generator_basis().tolist()}
    )
    # the complement of the generators is the constraint line itself
    assert abs(abs(gen.basis[0] @ fam.basis[0]) - 1) <= 1e-12
    assert gen.contains(P_STAR)
    with pytest.raises(ValueError):
        LinearFamilySpec.from_json({"alphabet": L4, "constraints": [F_RAW.tolist()]})
    with pytest.raises(ValueError):
        LinearFamilySpec.from_json(fam.to_json(), alpha=2.0)


def test_exp_family_member_examples():
    fam = ExpFamilySpec(0.5, U4, [F_RAW])
    P, z = exp_family_member(fam, [0.0])
    assert np.allclose(P.probs, U4.probs) and z == pytest.approx(1.0)
    P, z = exp_family_member(fam, [0.2], basis="raw")
    assert np.allclose(P.probs, [0.9, 0.1, 0, 0], atol=1e-15)
    assert z == pytest.approx(0.4, abs=1e-15)
    # alpha = 1: the classic exponential family
    Q = make_distribution(["a", "b", "c"], [0.2, 0.3, 0.5])
    f = np.array([1.0, 0.0, -2.0])
    P, z = exp_family_member(ExpFamilySpec(1.0, Q, [f]), [0.7], basis="raw")
    w = Q.probs * np.exp(0.7 * f)
    assert np.allclose(P.probs, w / w.sum(), atol=1e-15)
    assert z == pytest.approx(w.sum(), rel=1e-14)


def test_exp_family_domain():
    fam = ExpFamilySpec(3.0, U4, [F_RAW])
    with pytest.raises(OutOfDomain):
        exp_family_member(fam, [10.0], basis="raw")
    # 1/(1-alpha) = -1 at alpha = 2: an all-negative bracket is a real member
    fam2 = ExpFamilySpec(2.0, U4, [np.ones(4) + F_RAW * 0.01])
    P, z = exp_family_member(fam2, [10.0], basis="raw")
    assert z < 0 and np.all(P.probs > 0)
    with pytest.raises(ValueError):
        ExpFamilySpec(0.5, P_STAR, [F_RAW])


def test_fit_theta_examples():
    fam = ExpFamilySpec(0.5, U4, [F_RAW])
    theta, z = fit_theta(U4, fam)
    assert np.allclose(theta, 0, atol=1e-12) and z == pytest.approx(1.0, abs=1e-12)
    theta, z = fit_theta(P_STAR, fam, basis="raw")
    assert theta[0] == pytest.approx(0.2, abs=1e-12)
    assert z == pytest.approx(0.4, abs=1e-12)
    # the clipped symbol 4 has a strictly negative bracket: 0.5 + 0.1 * (-6)
    assert fam.bracket(theta, basis="raw")[3] == pytest.approx(-0.1, abs=1e-12)
    off = make_distribution(L4, [0.85, 0.15, 0, 0])
    assert fit_theta(off, fam) is None


def test_member_fit_round_trip(rng):
    for _ in range(100):
        a = float(rng.choice([0.4, 0.7, 1.0, 1.5, 2.5]))
        fam = random_exp_family(rng, 5, a, 2)
        theta = rng.normal(scale=0.3, size=2)
        try:
            P, z = exp_family_member(fam, theta)
        except OutOfDomain:
            continue
        fitted = fit_theta(P, fam)
        assert fitted is not None
        P2, z2 = exp_family_member(fam, fitted[0])
        assert np.max(np.abs(P2.probs - P.probs)) <= 1e-9
        assert z2 == pytest.approx(z, rel=1e-8)
        if a > 1:
            assert np.all(P.probs > 0)


def test_change_of_reference(rng):
    done = 0
    while done < 40:
        a = float(rng.choice([0.5, 2.0, 3.0]))
        fam = random_exp_family(rng, 4, a, 1)
        try:
            R, _ = exp_family_member(fam, rng.normal(scale=0.3, size=1))
        except OutOfDomain:
            continue
        if np.any(R.probs <= 0):
            continue
        assert fit_theta(fam.reference, ExpFamilySpec(a, R, fam.directions)) is not None
        done += 1


def test_alpha_convexity(rng):
    for _ in range(30):
        a = float(rng.choice([0.5, 2.0, 3.0]))
        fam, _ = random_family(rng, 5, a, 2)
        P0, P1 = sample_family_members(fam, 2, seed=int(rng.integers(1 << 30)))
        S = alpha_mixture(P0, P1, a, float(rng.uniform())).mixture
        assert np.max(np.abs(constraint_residual(S, fam))) <= 1e-10


def test_cone_support_matches_vertex_enumeration(rng):
    for _ in range(150):
        a = float(rng.uniform(0.2, 3.0))
        fam, _ = random_family(rng, int(rng.integers(3, 7)), a, int(rng.integers(1, 3)),
                               reduced_support=rng.random() < 0.5)
        assert np.array_equal(fam.support_mask, family_support_by_vertices(fam))


def test_cone_support_small_cases():
    assert cone_support(np.array([[1.0, 1.0]])).tolist() == [False, False]
    assert cone_support(np.array([[1.0, -1.0, 0.0]])).tolist() == [True, True, True]
    assert cone_support(np.array([[1.0, 0.0, 1.0]])).tolist() == [False, True, False]
