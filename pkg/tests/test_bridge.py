import numpy as np
import pytest

from modrelu.bridge import (
    certify_sparse,
    embed_sparse_to_modified,
    extract_plain_from_modified,
    random_sparse_plain,
    verify_inclusion_chain,
)
from modrelu.network import MODIFIED, PLAIN, Architecture, NetworkParams, forward, l1_norm, zero_network


def net(kind, *layers):
    layers = [np.atleast_2d(np.asarray(m, dtype=float)) for m in layers]
    widths = tuple([layers[0].shape[1]] + [m.shape[0] for m in layers])
    return NetworkParams(kind, Architecture(widths), tuple(layers))


def test_certify_sparse_examples():
    z = certify_sparse(zero_network(Architecture((1, 2, 1)), PLAIN))
    assert z.s == 0 and z.M > 0
    c = certify_sparse(net(PLAIN, [[1]], [[0.5]]))
    assert (c.s, c.M) == (2, 1.0)
    c = certify_sparse(net(PLAIN, [[0, -2]], [[3]]))
    assert (c.s, c.M) == (2, 3.0)


def test_embed_examples():
    z = embed_sparse_to_modified(zero_network(Architecture((2, 3, 1)), PLAIN))
    assert z.kind == MODIFIED and l1_norm(z) == 0
    f = net(PLAIN, [[1]], [[0.5]])
    g = embed_sparse_to_modified(f)
    assert g.layers[0].tolist() == [[2.0]] and g.layers[1].tolist() == [[0.5]]
    assert l1_norm(g) == 2.5 <= 4
    X = np.linspace(0, 1, 101)[:, None]
    assert np.array_equal(forward(f, X), forward(g, X))


def test_embed_random_sparse_exact():
    rng = np.random.default_rng(0)
    f = random_sparse_plain(Architecture((3, 8, 8, 1)), 20, 1.0, rng)
    g = embed_sparse_to_modified(f)
    X = rng.random((1000, 3))
    assert np.max(np.abs(forward(f, X) - forward(g, X))) == 0


def test_extract_examples():
    f = extract_plain_from_modified(net(MODIFIED, [[0.5]], [[2]]))
    assert f.layers[0].tolist() == [[0.0]]
    assert np.all(forward(f, np.random.default_rng(1).random((20, 1))) == 0)
    f = extract_plain_from_modified(net(MODIFIED, [[2]], [[0.5]]))
    assert f.layers[0].tolist() == [[1.0]] and f.layers[1].tolist() == [[0.5]]


def test_extract_forward_matches_for_any_modified():
    rng = np.random.default_rng(2)
    arch = Architecture((2, 6, 6, 1))
    g = NetworkParams(MODIFIED, arch, tuple(rng.normal(0, 3, s) for s in arch.layer_shapes))
    X = rng.random((1000, 2))
    assert np.array_equal(forward(extract_plain_from_modified(g), X), forward(g, X))


def test_kind_checks():
    with pytest.raises(ValueError):
        embed_sparse_to_modified(net(MODIFIED, [[1]], [[1]]))
    with pytest.raises(ValueError):
        extract_plain_from_modified(net(PLAIN, [[1]], [[1]]))
    with pytest.raises(ValueError):
        certify_sparse(net(MODIFIED, [[1]], [[1]]))


def test_inclusion_chain_zero_network():
    r = verify_inclusion_chain(zero_network(Architecture((2, 4, 1)), PLAIN), trials=100)
    assert r.ok
    assert r.max_discrepancy_embed == 0 and r.max_discrepancy_extract == 0 and r.l1 == 0


def test_inclusion_chain_single_large_weight():
    r = verify_inclusion_chain(net(PLAIN, [[3]], [[0]]), trials=10)
    assert r.ok
    assert r.l1 == 4 <= 1 * 4
    assert r.l2sq == 16 <= 1 * 16


def test_inclusion_chain_random_battery():
    rng = np.random.default_rng(3)
    for _ in range(30):
        L = int(rng.integers(1, 5))
        widths = tuple(int(w) for w in rng.integers(1, 9, size=L + 1)) + (1,)
        f = random_sparse_plain(Architecture(widths), int(rng.integers(1, 21)), 1.0, rng)
        r = verify_inclusion_chain(f, trials=200, seed=int(rng.integers(2**31)))
        assert r.ok, r.violations
    assert any("extracted nonzeros" in line for line in r.lines())
