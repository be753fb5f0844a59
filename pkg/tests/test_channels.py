"""Outgoing-channel roots of the site-equation determinant at fixed energy."""

import numpy as np
import pytest

from twopolaritons.bands import band_structure, branch_energy
from twopolaritons.channels import (
    ChannelRoot,
    channel_polynomial,
    find_channel_roots,
    polynomial_degree,
    polynomial_roots,
)
from twopolaritons.errors import ChannelCountError
from twopolaritons.model import ModelParams, bloch_matrix

RNG = np.random.default_rng(37)


def random_params(rng):
    return ModelParams(
        xi=rng.uniform(-1.0, 1.0),
        delta=rng.uniform(-5.0, 5.0),
        K=rng.uniform(-2.0 * np.pi, 2.0 * np.pi),
    )


def test_polynomial_is_palindromic():
    # det(M(lam) - E) in the variable z = e^{i lam} has reflection-symmetric
    # coefficients: roots come in (z, 1/z) pairs.
    for _ in range(50):
        p = random_params(RNG)
        e = RNG.uniform(2 * p.delta - 6.0, 2 * p.delta + 6.0)
        coeffs = channel_polynomial(e, p)
        assert np.allclose(coeffs, coeffs[::-1], rtol=0, atol=1e-9 * np.abs(coeffs).max())


def test_polynomial_degree_and_root_pairing():
    for _ in range(30):
        p = random_params(RNG)
        e = RNG.uniform(2 * p.delta - 6.0, 2 * p.delta + 6.0)
        coeffs = channel_polynomial(e, p)
        deg = polynomial_degree(coeffs)
        assert deg % 2 == 0
        roots = polynomial_roots(coeffs)
        assert len(roots) == deg
        # each root's inverse is also a root
        for z in roots:
            assert np.min(np.abs(roots - 1.0 / z)) < 1e-6 * max(1.0, abs(1.0 / z))


def test_roots_satisfy_determinant():
    count = 0
    for _ in range(200):
        p = random_params(RNG)
        e = RNG.uniform(2 * p.delta - 6.0, 2 * p.delta + 6.0)
        try:
            channels = find_channel_roots(e, p)
        except (ChannelCountError, Exception):
            continue
        count += 1
        for root in channels:
            m = bloch_matrix(p, root.lam) - e * np.eye(4)
            scale = float(np.prod(np.linalg.norm(m, axis=1)))
            assert abs(np.linalg.det(m)) < 1e-8 * max(1.0, scale)
    assert count > 150


def test_always_three_channels():
    for _ in range(100):
        p = random_params(RNG)
        e = RNG.uniform(2 * p.delta - 6.0, 2 * p.delta + 6.0)
        try:
            channels = find_channel_roots(e, p)
        except ChannelCountError:
            continue
        assert len(channels) == 3
        for root in channels:
            assert isinstance(root, ChannelRoot)


def test_k0_closed_form_matches_general_solver():
    # At K=0 the cubic factorizes; slightly off K=0 the general path must
    # approach the same roots.
    p0 = ModelParams(xi=-0.2, delta=0.4, K=0.0)
    p1 = ModelParams(xi=-0.2, delta=0.4, K=1e-7)
    for e in (1.1, -1.3, 2.6):
        r0 = sorted(find_channel_roots(e, p0), key=lambda r: (r.lam.real, r.lam.imag))
        r1 = sorted(find_channel_roots(e, p1), key=lambda r: (r.lam.real, r.lam.imag))
        for a, b in zip(r0, r1):
            assert abs(a.lam - b.lam) < 1e-5
            assert a.is_open == b.is_open


def test_open_closed_split_in_band_and_gap():
    p = ModelParams(xi=-0.2)
    bs = band_structure(p)
    # in-band energy away from E = 2*delta: AB and BA open, one closed mode
    channels = find_channel_roots(0.1, p)
    open_roots = [r for r in channels if r.is_open]
    assert len(open_roots) == 2
    assert sorted(r.branch for r in open_roots) == ["AB", "BA"]
    # mid AA band: one open channel
    e_aa = 0.5 * sum(bs.branch_edges["AA"])
    open_aa = [r for r in find_channel_roots(e_aa, p) if r.is_open]
    assert len(open_aa) == 1 and open_aa[0].branch == "AA"
    # in a gap: all channels closed and decaying
    gap = bs.gaps[0]
    channels = find_channel_roots(0.5 * (gap.lo + gap.hi), p)
    assert all(not r.is_open for r in channels)
    for r in channels:
        assert abs(r.z) < 1.0  # retained root decays to the right
        assert r.lam.imag > 0.0


def test_open_roots_are_real_momenta_on_branch():
    p = ModelParams(xi=-0.35, delta=0.9, K=0.7)
    e = branch_energy("AB", 1.2, p)
    channels = find_channel_roots(e, p)
    for root in channels:
        if not root.is_open:
            continue
        assert abs(root.lam.imag) < 1e-10
        assert abs(branch_energy(root.branch, root.lam.real, p) - e) < 1e-8
        assert abs(abs(root.z) - 1.0) < 1e-10


def test_group_velocity_sign():
    # retained open roots carry flux away from the scatterer (v > 0), and
    # the stored velocity matches the branch dispersion derivative.
    from twopolaritons.bands import branch_energy_derivative

    p = ModelParams(xi=-0.2, delta=0.1)
    e = 0.05
    for root in find_channel_roots(e, p):
        if root.is_open:
            assert root.group_velocity > 0.0
            expect = branch_energy_derivative(root.branch, root.lam.real, p)
            assert abs(root.group_velocity - abs(expect)) < 1e-8


def test_scale_invariance():
    # (xi, delta, E) -> s*(xi, delta, E) with g -> s*g leaves channels fixed
    p1 = ModelParams(xi=-0.3, delta=0.8, K=0.9, g=1.0)
    p2 = ModelParams(xi=-0.6, delta=1.6, K=0.9, g=2.0)
    r1 = find_channel_roots(1.3, p1)
    r2 = find_channel_roots(2.6, p2)
    assert len(r1) == len(r2)
    for a, b in zip(r1, r2):
        assert abs(a.lam - b.lam) < 1e-8
        assert a.branch == b.branch


def test_channel_count_error_at_degenerate_energy():
    # E = 2*delta makes the like-branch factor degenerate at K=0
    p = ModelParams(xi=-0.2, delta=0.4)
    with pytest.raises(ChannelCountError):
        find_channel_roots(0.8, p)


def test_continuity_across_band_edge():
    # approaching a band edge from the gap side, |Im lam| -> 0 continuously
    p = ModelParams(xi=-0.2)
    bs = band_structure(p)
    edge = bs.gaps[0].lo  # top of the mixed band
    kappas = []
    for eps in (1e-2, 1e-4, 1e-6):
        channels = find_channel_roots(edge + eps, p)
        kappas.append(min(r.lam.imag for r in channels if not r.is_open))
    assert kappas[0] > kappas[1] > kappas[2]
    assert kappas[2] < 1e-2


def test_multiplicity_recorded():
    # K=0 mixed factor is a double root in w; the two unfolded channels
    # must carry multiplicity consistent with the factorization
    p = ModelParams(xi=-0.2)
    channels = find_channel_roots(0.1, p)
    mixed = [r for r in channels if r.branch in ("AB", "BA")]
    assert len(mixed) == 2
    assert all(r.multiplicity >= 1 for r in channels)
