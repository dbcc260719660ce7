import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modrelu.network import (
    MODIFIED,
    PLAIN,
    Architecture,
    ModelFormatError,
    NetworkParams,
    alpha,
    alpha_scalar,
    deserialize_model,
    effective_nonzeros,
    forward,
    l1_norm,
    l2sq_norm,
    matvec,
    model_to_dict,
    nu,
    nu_scalar,
    relu_scalar,
    scale_plain,
    serialize_model,
    zero_network,
)


def net(kind, *layers, **kw):
    layers = [np.atleast_2d(np.asarray(m, dtype=float)) for m in layers]
    widths = tuple([layers[0].shape[1]] + [m.shape[0] for m in layers])
    return NetworkParams(kind, Architecture(widths), tuple(layers), **kw)


@pytest.mark.parametrize("x, want", [(-2, -1), (0.5, 0), (3, 2), (1, 0), (-1, 0)])
def test_alpha_scalar(x, want):
    assert alpha_scalar(x) == want


@pytest.mark.parametrize("x, want", [(0, 0), (0.5, 1.5), (-2, -3)])
def test_nu_scalar(x, want):
    assert nu_scalar(x) == want


@pytest.mark.parametrize("x, want", [(-1, 0), (2, 2), (0, 0)])
def test_relu_scalar(x, want):
    assert relu_scalar(x) == want


@pytest.mark.parametrize("f", [alpha_scalar, nu_scalar, relu_scalar])
def test_scalar_maps_reject_nonfinite(f):
    with pytest.raises(ValueError):
        f(math.nan)
    with pytest.raises(ValueError):
        f(math.inf)


def test_matvec():
    assert list(matvec([[1, 2], [3, 4]], [1, 1])) == [3, 7]
    v = np.array([0.3, -2.0, 5.0])
    assert np.array_equal(matvec(np.eye(3), v), v)
    assert list(matvec([[2, -2]], [0.5, 0.5])) == [0]
    with pytest.raises(ValueError):
        matvec([[1, 2]], [1, 2, 3])


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_alpha_vectorized_matches_scalar(x):
    assert alpha(np.array([x]))[0] == alpha_scalar(x)
    assert nu(np.array([x]))[0] == nu_scalar(x)


def test_alpha_nu_exact_on_unit_interval():
    x = np.random.default_rng(0).uniform(-1, 1, 10**5)
    assert np.array_equal(alpha(nu(x)), x)


def test_forward_examples():
    g = net(MODIFIED, [[2]], [[-3]])
    assert forward(g, [0.4]) == pytest.approx(-1.2, abs=1e-15)
    f = net(PLAIN, [[1, -1]], [[1]])
    assert forward(f, [0.7, 0.2]) == pytest.approx(0.5, abs=1e-15)
    dead = net(MODIFIED, [[0.9, -1.0], [0.2, 0.5]], [[1, 1]], [[4]])
    X = np.random.default_rng(1).random((50, 2))
    assert np.all(forward(dead, X) == 0)


def test_forward_domain_and_shape_checks():
    g = net(MODIFIED, [[2]], [[-3]])
    with pytest.raises(ValueError):
        forward(g, [1.5])
    with pytest.raises(ValueError):
        forward(g, [0.1, 0.2])


def test_clip_bound_holds_for_million_inputs():
    rng = np.random.default_rng(2)
    g = NetworkParams(MODIFIED, Architecture((3, 16, 16, 1)),
                      tuple(rng.normal(0, 5, s) for s in Architecture((3, 16, 16, 1)).layer_shapes), clip_bound=1.0)
    out = forward(g, rng.random((10**6, 3)))
    assert np.max(np.abs(out)) <= 1.0


def test_augment_input_acts_as_bias():
    g = net(PLAIN, [[0, 1]], [[1]], augment_input=True)
    assert forward(g, [0.3]) == 1.0
    assert g.input_dim == 1


def test_norm_examples():
    arch = Architecture((2, 1, 1))
    assert l1_norm(zero_network(arch)) == 0 and l2sq_norm(zero_network(arch)) == 0
    g = net(MODIFIED, [[2, -2]], [[1]])
    assert l1_norm(g) == 5
    assert l2sq_norm(g) == 9


def test_norms_invariant_under_layer_permutation():
    rng = np.random.default_rng(3)
    arch = Architecture((2, 5, 5, 1))
    layers = [rng.normal(size=s) for s in arch.layer_shapes]
    g = NetworkParams(MODIFIED, arch, tuple(layers))
    P = rng.permutation(5)
    Q = rng.permutation(5)
    permuted = [layers[0][P], layers[1][Q][:, P], layers[2][:, Q]]
    h = NetworkParams(MODIFIED, arch, tuple(permuted))
    assert l1_norm(g) == l1_norm(h)
    assert l2sq_norm(g) == l2sq_norm(h)
    X = rng.random((100, 2))
    assert np.allclose(forward(g, X), forward(h, X), rtol=1e-13, atol=1e-13)


def test_effective_nonzeros():
    assert effective_nonzeros(net(MODIFIED, [[0.5, -1]], [[1]])) == 1
    assert effective_nonzeros(net(MODIFIED, [[2, -2]], [[1]])) == 3
    assert effective_nonzeros(zero_network(Architecture((2, 3, 1)))) == 0
    with pytest.raises(ValueError):
        effective_nonzeros(net(PLAIN, [[1]], [[1]]))


def test_scale_plain_examples():
    f = net(PLAIN, [[1]], [[0.5]])
    x = [1.0]
    assert forward(scale_plain(f, 1), x) == forward(f, x)
    assert forward(scale_plain(f, 2), x) == pytest.approx(2.0)
    h = net(PLAIN, [[1]], [[1]], [[1]])
    assert forward(scale_plain(h, 0.5), x) == pytest.approx(0.125)
    with pytest.raises(ValueError):
        scale_plain(f, 0)
    with pytest.raises(ValueError):
        scale_plain(net(MODIFIED, [[1]], [[1]]), 2)


def test_params_are_immutable_copies():
    W = np.array([[2.0]])
    g = net(MODIFIED, W, [[1]])
    W[0, 0] = 7
    assert g.layers[0][0, 0] == 2
    with pytest.raises(ValueError):
        g.layers[0][0, 0] = 3


def test_params_validation():
    with pytest.raises(ValueError):
        NetworkParams(MODIFIED, Architecture((1, 2, 1)), (np.zeros((2, 1)),))
    with pytest.raises(ValueError):
        NetworkParams(MODIFIED, Architecture((1, 2, 1)), (np.zeros((3, 1)), np.zeros((1, 2))))
    with pytest.raises(ValueError):
        net(MODIFIED, [[math.nan]], [[1]])
    with pytest.raises(ValueError):
        net(MODIFIED, [[1]], [[1]], clip_bound=-1)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.sampled_from([MODIFIED, PLAIN]), st.booleans())
def test_serialize_roundtrip_bit_identical(seed, kind, clip):
    rng = np.random.default_rng(seed)
    arch = Architecture((2, 3, 4, 1))
    g = NetworkParams(kind, arch, tuple(rng.normal(0, 10, s) for s in arch.layer_shapes),
                      clip_bound=1.5 if clip else None, augment_input=bool(seed % 2))
    h = deserialize_model(serialize_model(g))
    assert h == g
    for a, b in zip(g.layers, h.layers):
        assert a.tobytes() == b.tobytes()


def test_deserialize_rejects_bad_documents():
    import json

    g = net(MODIFIED, [[2, 1]], [[1]])
    doc = model_to_dict(g)
    doc["layers"][0]["rows"] = 2
    with pytest.raises(ModelFormatError):
        deserialize_model(json.dumps(doc).encode())
    with pytest.raises(ModelFormatError):
        deserialize_model(b"{not json")
    with pytest.raises(ModelFormatError):
        deserialize_model(serialize_model(g).replace(b"2.0", b"NaN", 1))


def test_deserialize_accepts_modified_document():
    doc = ('{"format_version": 1, "kind": "modified", "widths": [1, 1], "clip_bound": null, '
           '"layers": [{"rows": 1, "cols": 1, "data": [2.0]}, {"rows": 1, "cols": 1, "data": [1.0]}]}')
    with pytest.raises(ModelFormatError):
        deserialize_model(doc.encode())
    doc = doc.replace('"widths": [1, 1]', '"widths": [1, 1, 1]')
    g = deserialize_model(doc.encode())
    assert g.kind == MODIFIED and g.depth == 1
