# coding: utf-8
#
# This code is part of loopsoup.
#
# Copyright (c) 2026, The loopsoup developers
#
# This code is licensed under the MIT License. The copyright notice in the
# LICENSE file in the root directory and this permission notice shall
# be included in all copies or substantial portions of the Software.

import numpy as np
from pytest import mark, raises, approx
from numpy.testing import assert_allclose, assert_array_equal, assert_array_less
from hypothesis import given, settings, strategies as st
from loopsoup import sampler
from loopsoup.sampler import LatticeLoop, LoopSoup, LoopSampler
from loopsoup.exact import greens_function, n_point_function, total_loop_mass
from loopsoup.lattice import DiscreteDomain, build_domain
from loopsoup.utils import ParameterError

settings.load_profile("loopsoup")

UNIT = {"shape": "square", "n": 1, "mesh": 1}


def test_make_rng_streams():
    a = sampler.make_rng(3, 1).random(4)
    b = sampler.make_rng(3, 1).random(4)
    c = sampler.make_rng(3, 2).random(4)
    assert_array_equal(a, b)
    assert not np.allclose(a, c)
    with raises(ParameterError):
        sampler.make_rng(-1)


# =========================================================================


def test_loop_basics():
    loop = LatticeLoop((0, 0), "ENWS")
    assert loop.time_length == 4
    assert len(loop) == 4
    assert_array_equal(loop.vertices(), [[0, 0], [1, 0], [1, 1], [0, 1]])
    assert loop.edges() == [
        ((0, 0), (1, 0)),
        ((1, 0), (1, 1)),
        ((0, 1), (1, 1)),
        ((0, 0), (0, 1)),
    ]
    assert_array_equal(loop.bbox(), [[0, 1], [0, 1]])
    assert loop.reversed() == LatticeLoop((0, 0), "NESW")
    assert loop.todict() == {"root": [0, 0], "steps": "ENWS"}


def test_loop_diameter():
    loop = LatticeLoop((3, -1), "EENNWWSS")
    assert loop.diameter() == 2.0
    assert loop.diameter(0.5) == 1.0
    assert LatticeLoop((0, 0), "EW").diameter() == 1.0


@mark.parametrize("steps", ["", "EX", "ENW", "EENW"])
def test_invalid_loops(steps):
    with raises(ParameterError):
        LatticeLoop((0, 0), steps)


def test_loop_from_vertices():
    loop = LatticeLoop((2, 1), "NNESWS")
    assert LatticeLoop.from_vertices(loop.vertices()) == loop
    closed = np.vstack([loop.vertices(), loop.vertices()[:1]])
    assert LatticeLoop.from_vertices(closed) == loop
    with raises(ParameterError):
        LatticeLoop.from_vertices([[0, 0], [2, 0]])


@given(st.lists(st.sampled_from("ENWS"), min_size=1, max_size=20))
def test_loop_from_walk_and_back(half):
    steps = "".join(half)
    back = "".join({"E": "W", "W": "E", "N": "S", "S": "N"}[c] for c in reversed(steps))
    loop = LatticeLoop((0, 0), steps + back)
    assert loop.time_length == 2 * len(steps)
    assert LatticeLoop.from_vertices(loop.vertices()) == loop
    assert loop.reversed().reversed() == loop


def test_soup_dump_and_load(tmp_path):
    dom = build_domain("box:3")
    soup = LoopSoup(dom, [LatticeLoop((0, 0), "ENWS"), LatticeLoop((1, 2), "EW")], 0.5)
    file = tmp_path / "soup.jsonl"
    soup.dump(file)
    loaded = LoopSoup.load(file, dom, 0.5)
    assert loaded.loops == soup.loops
    assert_array_equal(loaded.lengths(), [4, 2])


def test_soup_filter_and_merge():
    dom = build_domain("box:3")
    a = LoopSoup(dom, [LatticeLoop((0, 0), "ENWS"), LatticeLoop((1, 2), "EW")], 0.5)
    b = LoopSoup(dom, [LatticeLoop((1, 1), "NS")], 0.25)
    merged = a + b
    assert len(merged) == 3
    assert merged.lam == 0.75
    assert len(merged.filter(lambda loop: loop.time_length > 2)) == 1
    with raises(ParameterError):
        a + LoopSoup(build_domain("box:2"), [], 0.5)


# =========================================================================


def test_sampler_unit_square():
    dom = build_domain(UNIT)
    s = LoopSampler(dom)
    assert s.total_mass == approx(np.log(4 / 3))
    masses = s.length_distribution()
    assert masses[0] == 0
    assert masses[2] == approx(0.25)
    assert np.all(masses[1::2] == 0)
    assert masses.sum() == approx(s.total_mass, rel=1e-9)
    assert_allclose(s.root_weights(2), 0.125)
    assert s.max_length == len(masses) - 1


@mark.parametrize("text, kappa", [("box:3", 0.0), ("box:4", 0.5), ("disk:1", 0.0)])
def test_sampler_total_mass(text, kappa):
    dom = build_domain(text)
    s = LoopSampler(dom, kappa)
    assert s.total_mass == approx(total_loop_mass(dom, kappa).value, rel=1e-9)
    assert s.length_distribution().sum() == approx(s.total_mass, rel=1e-9)


def test_sampler_invalid_kappa():
    with raises(ParameterError):
        LoopSampler(build_domain("box:2"), kappa=-0.5)


@given(st.integers(0, 15), st.integers(1, 20), st.integers(0, 1000))
def test_bridge_is_closed_walk(root, half, seed):
    dom = build_domain("box:3")
    s = sampler.get_loop_sampler(dom)
    t = 2 * half
    path = s.bridge(root, t, np.random.default_rng(seed))
    assert len(path) == t + 1
    assert path[0] == root and path[-1] == root
    adj = dom.adjacency_matrix().toarray()
    for u, v in zip(path, path[1:]):
        assert adj[u, v] == 1


def test_sample_soup_reproducible():
    dom = build_domain("box:4")
    a = sampler.sample_loop_soup(dom, 2.0, seed=5, replica=3)
    b = sampler.sample_loop_soup(dom, 2.0, seed=5, replica=3)
    c = sampler.sample_loop_soup(dom, 2.0, seed=5, replica=3, num_jobs=3)
    assert a.loops == b.loops
    assert a.loops == c.loops
    assert a.seed == 5 and a.replica == 3


def test_sample_soup_loops_in_domain():
    dom = build_domain("disk:1")
    soup = sampler.sample_loop_soup(dom, 3.0, seed=1)
    assert len(soup) > 0
    for loop in soup:
        assert loop.time_length % 2 == 0
        assert all(dom.edge_index(e) is not None for e in loop.edges())


def test_sample_soup_empty():
    dom = build_domain("box:3")
    assert len(sampler.sample_loop_soup(dom, 0.0)) == 0
    assert len(sampler.sample_loop_soup(dom, 1.0, kappa=np.inf)) == 0
    with raises(ParameterError):
        sampler.sample_loop_soup(dom, -1.0)


def test_soup_loop_count_is_poisson():
    dom = build_domain("box:3")
    lam, n = 1.5, 400
    mean = lam * total_loop_mass(dom).value
    counts = np.array(
        [len(sampler.sample_loop_soup(dom, lam, seed=2, replica=r)) for r in range(n)]
    )
    assert abs(counts.mean() - mean) < 4 * np.sqrt(mean / n)
    assert abs(counts.var(ddof=1) - mean) < 0.3 * mean


def test_get_loop_sampler_is_shared():
    dom = build_domain("box:3")
    other = build_domain("box:3")
    assert sampler.get_loop_sampler(dom) is sampler.get_loop_sampler(other)
    assert sampler.get_loop_sampler(dom) is not sampler.get_loop_sampler(dom, 1.0)


def test_thin_soup():
    dom = build_domain("box:4")
    sub = dom.subdomain([(i, j) for i in range(2) for j in range(2)])
    soup = sampler.sample_loop_soup(dom, 4.0, seed=3)
    thinned = sampler.thin_soup(soup, sub)
    assert thinned.domain is sub
    for loop in thinned:
        assert all(sub.edge_index(e) is not None for e in loop.edges())
    outside = [loop for loop in soup if loop not in thinned.loops]
    for loop in outside:
        assert any(sub.edge_index(e) is None for e in loop.edges())


def test_cache_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("LOOPSOUP_CACHE_DIR", str(tmp_path))
    dom = build_domain("box:2")
    first = LoopSampler(dom)
    mass = first.total_mass
    assert len(list(tmp_path.glob("eigh-*.npz"))) == 1
    second = LoopSampler(dom)
    assert second.total_mass == mass


def test_bridge_uniform_on_unit_square():
    s = LoopSampler(build_domain(UNIT))
    rng = np.random.default_rng(11)
    n = 4000
    counts = dict()
    for _ in range(n):
        path = tuple(s.bridge(0, 4, rng))
        counts[path] = counts.get(path, 0) + 1
    # (A^4)_00 = 8 closed walks of four steps on the 4-cycle
    assert len(counts) == 8
    err = np.sqrt(1 / 8 * 7 / 8 / n)
    for c in counts.values():
        assert abs(c / n - 1 / 8) < 4 * err


def test_partial_spectrum_matches_dense():
    dom = build_domain("box:6")
    dense = LoopSampler(dom)
    partial = LoopSampler(dom, dense_limit=0, num_modes=8)
    assert dense.dense and not partial.dense
    assert dense.short_length == 0
    assert len(partial.eigenvalues) == 8
    assert partial.total_mass == approx(dense.total_mass, rel=1e-10)
    short = partial.short_length
    assert 2 < short < dense.max_length
    full, tail = dense.length_distribution(), partial.length_distribution()
    assert np.all(tail[: short + 1] == 0)
    m = min(len(full), len(tail))
    assert_allclose(tail[short + 1 : m], full[short + 1 : m], rtol=1e-8, atol=1e-300)
    t = short + 2
    assert_allclose(
        partial.root_weights(t), dense.root_weights(t), rtol=1e-8, atol=1e-10
    )
    with raises(ParameterError):
        partial.root_weights(short)


def test_short_walks_follow_loop_measure():
    dom = build_domain("box:6")
    dense = LoopSampler(dom)
    partial = LoopSampler(dom, dense_limit=0, num_modes=8)
    short = partial.short_length
    adj = dom.adjacency_matrix().toarray()
    lam, n = 1.0, 300
    counts = np.zeros((n, 3))
    for r in range(n):
        walks = partial.short_walks(lam, sampler.make_rng(5, r))
        lengths = np.array([len(p) - 1 for p in walks], dtype=np.int64)
        counts[r] = np.sum(lengths == 2), np.sum(lengths == 4), len(walks)
        for p in walks:
            assert p[0] == p[-1]
            assert len(p) - 1 <= short
            assert all(adj[u, v] == 1 for u, v in zip(p, p[1:]))
    masses = dense.length_distribution()
    expected = lam * np.array([masses[2], masses[4], masses[2 : short + 1].sum()])
    err = np.sqrt(expected / n)
    assert_array_less(np.abs(counts.mean(axis=0) - expected), 4 * err)


def test_partial_spectrum_soups():
    dom = build_domain("box:6")
    partial = LoopSampler(dom, dense_limit=0, num_modes=8)
    lam, n = 0.5, 200
    counts = np.array([len(partial.sample(lam, seed=4, replica=r)) for r in range(n)])
    mean = lam * partial.total_mass
    assert abs(counts.mean() - mean) < 4 * np.sqrt(mean / n)
    a = partial.sample(lam, seed=9, num_jobs=1)
    b = partial.sample(lam, seed=9, num_jobs=3)
    assert [lp.todict() for lp in a.loops] == [lp.todict() for lp in b.loops]


@mark.slow
def test_fine_disk_uses_partial_spectrum():
    dom = build_domain({"shape": "disk", "radius": 1.0, "mesh": 1 / 128})
    s = LoopSampler(dom)
    assert s.num_vertices > sampler.DENSE_EIGH_LIMIT
    assert not s.dense
    assert s.decomposition_nbytes <= sampler.CACHE_LIMIT_BYTES // 4
    assert s.total_mass == approx(total_loop_mass(dom).value, rel=1e-9)
    soup = s.sample(0.5, seed=1)
    assert len(soup) > 0
    assert np.all(soup.lengths() % 2 == 0)


# =========================================================================


def test_dgff_shapes():
    dom = build_domain("box:2")
    assert sampler.sample_dgff(dom).values.shape == (dom.num_vertices,)
    assert sampler.sample_dgff(dom, size=7).values.shape == (7, dom.num_vertices)


def test_dgff_covariance():
    dom = build_domain(UNIT)
    phi = sampler.sample_dgff(dom, seed=4, size=40_000).values
    cov = np.cov(phi, rowvar=False)
    green = np.asarray(greens_function(dom))
    assert_allclose(np.diag(cov), 7 / 6, rtol=0.04)
    assert_allclose(cov, green, atol=0.05)


def test_dual_couplings():
    dom = build_domain("box:2")
    tiny = sampler.dual_couplings(dom, np.full(dom.num_vertices, 1e-8))
    assert np.all(np.isfinite(tiny)) and np.all(tiny > 10)
    assert np.all(np.isinf(sampler.dual_couplings(dom, np.zeros(dom.num_vertices))))
    strong = sampler.dual_couplings(dom, np.full(dom.num_vertices, 10.0))
    assert np.all(strong >= 0) and np.all(strong < 1e-6)


def test_ising_strong_coupling_all_plus():
    dom = build_domain("box:2")
    couplings = sampler.dual_couplings(dom, np.full(dom.num_vertices, 1e-8))
    for method in ("exact", "wolff"):
        config = sampler.sample_ising_dual(
            dom, couplings, seed=1, method=method, burn_in=50
        )
        assert np.all(config.spins == 1)
    config = sampler.sample_ising_dual(dom, np.full(dom.num_edges, np.inf))
    assert np.all(config.spins == 1)


def test_ising_free_spins():
    dom = build_domain(UNIT)
    spins = [
        sampler.sample_ising_dual(dom, np.zeros(4), seed=2, replica=r).spins[0]
        for r in range(2000)
    ]
    assert abs(np.mean(spins)) < 0.1


def test_ising_wolff_matches_exact():
    dom = DiscreteDomain([(0, 0), (1, 0)])
    couplings = np.full(dom.num_edges, 0.3)
    n = 1000
    exact_spins = np.array([
        sampler.sample_ising_dual(
            dom, couplings, seed=3, replica=r, method="exact"
        ).spins
        for r in range(n)
    ])
    wolff_spins = np.array([
        sampler.sample_ising_dual(
            dom, couplings, seed=4, replica=r, method="wolff", burn_in=50
        ).spins
        for r in range(n)
    ])
    assert abs(exact_spins.mean() - wolff_spins.mean()) < 0.15
    prod_exact = np.mean(exact_spins[:, 0] * exact_spins[:, 1])
    prod_wolff = np.mean(wolff_spins[:, 0] * wolff_spins[:, 1])
    assert abs(prod_exact - prod_wolff) < 0.15


@mark.parametrize("sweeps", [0, 1, 7])
def test_wolff_burn_in_counts_sweeps(sweeps):
    dom = build_domain("box:2")
    rng = np.random.default_rng(5)
    free = np.zeros(dom.num_edges)
    spins, updates = sampler._ising_wolff(dom, free, rng, sweeps)
    # single-site clusters
    assert updates == sweeps * dom.num_faces
    assert spins.shape == (dom.num_faces,)
    frozen = np.full(dom.num_edges, np.inf)
    spins, updates = sampler._ising_wolff(dom, frozen, rng, sweeps)
    # one cluster holds every site
    assert updates == sweeps
    assert np.all(spins == 1)
    with raises(ParameterError):
        sampler.sample_ising_dual(dom, free, method="wolff", burn_in=-1)


def test_ising_errors():
    dom = build_domain("box:2")
    with raises(ParameterError):
        sampler.sample_ising_dual(dom, np.zeros(3))
    with raises(ParameterError):
        sampler.sample_ising_dual(dom, -np.ones(dom.num_edges))
    with raises(ParameterError):
        sampler.sample_ising_dual(dom, np.ones(dom.num_edges), method="metropolis")
    big = build_domain("box:5")
    with raises(ParameterError):
        sampler.sample_ising_dual(big, np.ones(big.num_edges), method="exact")


@mark.parametrize(
    "func", [sampler.sample_spin_via_dgff_ising, sampler.sample_spin_via_dgff_coins]
)
def test_dgff_spins_match_loop_soup(func):
    dom = build_domain("box:2")
    n = 2000
    spins = np.array([func(dom, seed=7, replica=r) for r in range(n)])
    assert spins.shape == (n, dom.num_faces)
    assert set(np.unique(spins)) <= {-1, 1}
    expected = n_point_function(dom, [(0, 0)], 0.5)
    assert abs(spins[:, dom.face_index((0, 0))].mean() - expected) < 4 / np.sqrt(n)
    expected = n_point_function(dom, [(0, 0), (1, 1)], 0.5)
    prod = spins[:, dom.face_index((0, 0))] * spins[:, dom.face_index((1, 1))]
    assert abs(prod.mean() - expected) < 4 / np.sqrt(n)


def test_massive_halfplane_field():
    grid = sampler.sample_massive_halfplane_field(6, 1.0, seed=2)
    assert grid.shape == (6, 6)
    assert set(np.unique(grid)) <= {-1, 1}
    assert_array_equal(grid, sampler.sample_massive_halfplane_field(6, 1.0, seed=2))
    with raises(ParameterError):
        sampler.sample_massive_halfplane_field(6, 0.0)
    with raises(ParameterError):
        sampler.sample_massive_halfplane_field(0, 1.0)
