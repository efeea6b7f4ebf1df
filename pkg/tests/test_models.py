import jax.numpy as jnp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from sasaki import base as bg
from sasaki import bundle as tb
from sasaki.models import (
    BadSpec,
    FieldSpec,
    ModelId,
    Poly,
    Term,
    base_library,
    make_field,
    make_model,
    make_one_form,
    parse_field,
    parse_model,
    parse_poly,
    tm_library,
)

from conftest import MODEL_SPECS, model

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
factor = st.tuples(st.sampled_from("xv"), st.integers(1, 3), st.integers(1, 4))
term = st.builds(Term, finite, st.lists(factor, max_size=3).map(tuple))
poly = st.lists(term, min_size=1, max_size=4).map(lambda ts: Poly(tuple(ts)))
base_poly = poly.map(lambda p: Poly(tuple(Term(t.coef, tuple(("x", i, k) for _, i, k in t.factors)) for t in p.terms)))


def base_specs():
    return st.one_of(
        st.builds(lambda c: FieldSpec("const", tuple(c)), st.lists(finite, min_size=1, max_size=3)),
        st.just(FieldSpec("position")),
        st.builds(lambda i, d: FieldSpec("rotation", (i, i + d)), st.integers(1, 3), st.integers(1, 3)),
        st.builds(lambda p: FieldSpec("gradient", (p,)), base_poly),
        st.builds(lambda ps: FieldSpec("poly", tuple(ps)), st.lists(base_poly, min_size=1, max_size=3)),
    )


def field_specs():
    lifted = st.builds(lambda s, lift: FieldSpec(s.kind, s.args, lift), base_specs(), st.sampled_from(["h", "v", "ext"]))
    skew = st.integers(1, 3).flatmap(
        lambda n: st.lists(st.lists(finite, min_size=n, max_size=n).map(tuple), min_size=n, max_size=n).map(tuple)
    )
    return st.one_of(
        base_specs(),
        lifted,
        st.just(FieldSpec("xi")),
        st.just(FieldSpec("spray")),
        st.builds(lambda P: FieldSpec("skew", P), skew),
        st.builds(lambda ps: FieldSpec("poly", tuple(ps)), st.lists(poly, min_size=2, max_size=4)),
    )


@given(field_specs())
def test_field_spec_roundtrip(spec):
    text = str(spec)
    assert parse_field(text) == spec
    assert str(parse_field(text)) == text


@given(poly, st.lists(finite, min_size=3, max_size=3), st.lists(finite, min_size=3, max_size=3))
def test_poly_evaluation(p, x, v):
    x = [c / 1e6 for c in x]
    v = [c / 1e6 for c in v]
    expected = 0.0
    for t in p.terms:
        val = t.coef
        for kind, i, k in t.factors:
            val *= (x if kind == "x" else v)[i - 1] ** k
        expected += val
    assert p(np.asarray(x), np.asarray(v)) == pytest.approx(expected, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize(
    "text",
    ["x1^2-x2^2", "2*x1*x2", "1+x1^2-x2^2", "-3.5*x1*v2^3+0.25", "x1", "-x2", "0.001*x1", "1e-20*x1", "0"],
)
def test_poly_examples_roundtrip(text):
    assert str(parse_poly(text)) == text


@pytest.mark.parametrize(
    "text,pos",
    [
        ("x1+", 3),
        ("x1*", 3),
        ("+x1", 0),
        ("2x1", 1),
        ("x1^a", 3),
        ("x1 x2", 2),
        ("x0", 0),
        ("y1", 0),
        ("x1x2", 2),
    ],
)
def test_poly_parse_errors_have_positions(text, pos):
    with pytest.raises(BadSpec) as err:
        parse_poly(text)
    assert err.value.position == pos


@pytest.mark.parametrize(
    "text",
    [
        "",
        "rot:1,2",
        "rotation:1",
        "rotation:1,1",
        "const:a,1",
        "position:3",
        "h:xi",
        "ext",
        "skew:[[0,1],[1]]",
        "skew:0,1",
        "poly:x1+",
        "const:1, 2",
    ],
)
def test_bad_field_specs(text):
    with pytest.raises(BadSpec):
        parse_field(text)


def test_bad_field_error_position():
    with pytest.raises(BadSpec) as err:
        parse_field("ext:poly:x1,x2+*")
    assert err.value.position == 15
    assert "position 15" in str(err.value)


@pytest.mark.parametrize(
    "text,spec",
    [
        ("euclidean:3", ModelId("euclidean", (3.0,))),
        ("sphere", ModelId("sphere")),
        ("sphere:0.5,3", ModelId("sphere", (0.5, 3.0))),
        ("halfplane", ModelId("halfplane")),
        ("torus:2,1,2", ModelId("torus", (2.0, 1.0, 2.0))),
    ],
)
def test_parse_model(text, spec):
    assert parse_model(text) == spec
    assert str(spec) == text


@pytest.mark.parametrize(
    "text", ["klein", "euclidean:0", "euclidean:1.5", "sphere:-1", "sphere:1,2,3", "halfplane:1", "torus:2,1", "torus:2,1,-1", "sphere:a"]
)
def test_bad_models(text):
    with pytest.raises(BadSpec):
        make_model(text)


def test_model_metrics():
    x = jnp.array([0.3, -0.4])
    assert np.allclose(make_model("euclidean:2").metric(x), np.eye(2))
    assert np.allclose(make_model("sphere:1").metric(x), 4 / 1.25**2 * np.eye(2))
    assert np.allclose(make_model("sphere:2").metric(x), 4 / 1.5**2 * np.eye(2))
    assert np.allclose(make_model("halfplane").metric(jnp.array([0.0, 2.0])), np.eye(2) / 4)
    T = make_model("torus:2,1,3")
    assert T.periods == (1.0, 3.0) and T.contains([5.0, -9.0])


def test_sphere_box_inside_chart_ball():
    for spec in ("sphere:1", "sphere:1,3"):
        M = make_model(spec)
        lo, hi = M.box()
        assert np.linalg.norm(hi) <= 10.0 + 1e-12


@pytest.mark.parametrize("spec", ["sphere:1", "halfplane", "sphere:0.25"])
def test_scalar_curvature_of_models(spec):
    M = model(spec)
    xs, _ = bg.sample_bundle(M, 64, 42)
    target = 2 * M.curvature
    assert all(abs(bg.curvature(M, x).scal - target) < 1e-8 for x in xs[:16])


def test_rotation_field_values():
    M = model("euclidean:2")
    X = make_field(M, "rotation:1,2")
    assert np.allclose(X(jnp.array([2.0, 3.0])), [-3.0, 2.0])


def test_extension_of_rotation():
    M = model("euclidean:2")
    Z = make_field(M, "ext:rotation:1,2")
    W = Z(tb.point(jnp.array([2.0, 3.0]), jnp.array([5.0, 7.0])))
    assert np.allclose(tb.as_numpy(W), [-3.0, 2.0, -7.0, 5.0])


def test_skew_field_is_vertical():
    M = model("euclidean:2")
    Z = make_field(M, "skew:[[0,1],[-1,0]]")
    W = Z(tb.point(jnp.array([2.0, 3.0]), jnp.array([5.0, 7.0])))
    assert np.allclose(tb.as_numpy(W), [0.0, 0.0, 7.0, -5.0])


def test_gradient_field_raises_index_with_metric():
    M = model("halfplane")
    X = make_field(M, "gradient:x2", "base")
    assert np.allclose(X(jnp.array([0.0, 2.0])), [0.0, 4.0])


def test_tm_poly_field():
    M = model("euclidean:2")
    Z = make_field(M, "poly:v1,v2,0,x1*v1")
    W = Z(tb.point(jnp.array([2.0, 3.0]), jnp.array([5.0, 7.0])))
    assert np.allclose(tb.as_numpy(W), [5.0, 7.0, 0.0, 10.0])


@pytest.mark.parametrize(
    "spec,text,target",
    [
        ("euclidean:2", "const:1,2,3", "base"),
        ("euclidean:2", "rotation:1,3", "base"),
        ("euclidean:2", "poly:x3,0", "base"),
        ("euclidean:2", "poly:v1,0", "base"),
        ("euclidean:2", "ext:const:1", "tm"),
        ("euclidean:2", "skew:[[0]]", "tm"),
        ("euclidean:2", "poly:x1,x2", "tm"),
        ("euclidean:2", "position", "tm"),
        ("euclidean:2", "xi", "base"),
        ("euclidean:2", "xi", "form"),
        ("euclidean:2", "ext:position", "form"),
    ],
)
def test_field_does_not_fit_model(spec, text, target):
    with pytest.raises(BadSpec):
        make_field(model(spec), text, target)


def test_one_forms():
    M = model("halfplane")
    x = jnp.array([1.0, 2.0])
    assert np.allclose(make_one_form(M, "const:1,2")(x), [1.0, 2.0])
    assert np.allclose(make_one_form(M, "gradient:x1^2-x2^2")(x), [2.0, -4.0])
    # position as a 1-form is g(position, .)
    assert np.allclose(make_one_form(M, "position")(x), [0.25, 0.5])
    assert np.allclose(make_field(M, "poly:x1*x2,1", "form")(x), [2.0, 1.0])


@pytest.mark.parametrize("spec", MODEL_SPECS)
def test_libraries_parse_and_evaluate(spec):
    M = model(spec)
    x = jnp.asarray(np.mean(M.box(), axis=0))
    u = tb.point(x, jnp.ones(M.dim))
    for name in base_library(M):
        assert str(parse_field(name)) == name
        assert np.all(np.isfinite(np.asarray(make_field(M, name, "base")(x))))
    names = tm_library(M)
    assert {"xi", "spray"} <= set(names)
    for name in names:
        assert str(parse_field(name)) == name
        assert np.all(np.isfinite(tb.as_numpy(make_field(M, name, "tm")(u))))
