import numpy as np
import pytest
import hypothesis.strategies as st
from hypothesis import given, settings
from hypothesis.extra.numpy import arrays

from reactmotion.diffcore import (
    GraphError,
    NonFiniteGradient,
    OptimizerState,
    ParamStore,
    abs_,
    as_node,
    checkpoint,
    clip_by_global_norm,
    concat,
    constant,
    evaluate,
    exp,
    grad_check,
    gradients,
    log,
    matmul,
    maximum,
    mean,
    param,
    placeholder,
    reshape,
    rmsprop_step,
    safe_log,
    sigmoid,
    softmax,
    sqrt,
    square,
    stack,
    sum_,
    tanh,
    transpose,
)
from reactmotion.layers import add_lstm, lstm_step, zero_state

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def numeric_grad(f, x, step=1e-5):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        orig = x[idx]
        x[idx] = orig + step
        plus = f(x)
        x[idx] = orig - step
        minus = f(x)
        x[idx] = orig
        g[idx] = (plus - minus) / (2 * step)
    return g


def rel_error(a, b):
    return np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8))


# ---------------------------------------------------------------- forward values

def test_square_of_three():
    x = placeholder("x", 1.0)
    y = square(x)
    assert evaluate(y, {"x": np.array(3.0)}) == 9.0


def test_softmax_of_zeros_is_uniform():
    np.testing.assert_allclose(softmax(constant(np.zeros(3))).value, np.full(3, 1 / 3))


def test_sigmoid_of_zero():
    assert sigmoid(constant(0.0)).value == 0.5


def test_evaluate_is_pure():
    x = placeholder("x", np.ones((2, 3)))
    W = param(np.random.default_rng(0).normal(size=(3, 4)), "W")
    out = sum_(tanh(x @ W))
    v = np.random.default_rng(1).normal(size=(2, 3))
    first = evaluate(out, {"x": v})
    second = evaluate(out, {"x": v})
    assert first.tobytes() == second.tobytes()


def test_unbound_input_raises():
    x = placeholder("x", 1.0)
    y = square(x)
    x.value = None
    with pytest.raises(GraphError):
        evaluate(y)


def test_shape_mismatch_names_the_node():
    with pytest.raises(GraphError, match="matmul"):
        matmul(constant(np.ones((2, 3))), constant(np.ones((2, 3))))


def test_non_scalar_output_rejected():
    with pytest.raises(GraphError):
        gradients(param(np.ones(3), "w") * 2.0)


# ---------------------------------------------------------------- gradients

def test_square_gradient():
    x = param(np.array(3.0), "x")
    assert gradients(square(x))["x"] == pytest.approx(6.0)


def test_product_gradient():
    x, y = param(np.array(2.0), "x"), param(np.array(5.0), "y")
    g = gradients(x * y)
    assert g["x"] == pytest.approx(5.0) and g["y"] == pytest.approx(2.0)


def test_unreached_params_get_zero_gradient():
    store = ParamStore(0)
    store.weight("used", (2, 2))
    store.weight("unused", (3,))
    loss = sum_(store.node("used"))
    g = gradients(loss, store)
    np.testing.assert_array_equal(g["unused"], np.zeros(3))
    np.testing.assert_array_equal(g["used"], np.ones((2, 2)))


def test_repeated_param_use_accumulates():
    w = param(np.array([1.0, 2.0]), "w")
    loss = sum_(w * w) + sum_(w)
    np.testing.assert_allclose(gradients(loss)["w"], 2 * w.value + 1)


def _unary_cases():
    return [
        ("sigmoid", sigmoid, lambda v: v),
        ("tanh", tanh, lambda v: v),
        ("exp", exp, lambda v: v),
        ("square", square, lambda v: v),
        ("log", log, lambda v: np.abs(v) + 0.5),
        ("safe_log", safe_log, lambda v: np.abs(v) + 0.5),
        ("sqrt", sqrt, lambda v: np.abs(v) + 0.5),
        ("abs", abs_, lambda v: v + np.sign(v) * 0.1),
        ("maximum", lambda x: maximum(x, 0.2), lambda v: v + 0.05 * (np.abs(v - 0.2) < 0.05)),
        ("softmax", lambda x: softmax(x, axis=-1), lambda v: v),
        ("softmax0", lambda x: softmax(x, axis=0), lambda v: v),
        ("sum", lambda x: sum_(x, axis=1, keepdims=True), lambda v: v),
        ("mean", lambda x: mean(x, axis=0), lambda v: v),
        ("reshape", lambda x: reshape(x, (-1,)), lambda v: v),
        ("transpose", lambda x: transpose(x, (1, 0)), lambda v: v),
        ("slice", lambda x: x[:, 1:3], lambda v: v),
        ("fancy", lambda x: x[:, [0, 0, 2]], lambda v: v),
    ]


@pytest.mark.parametrize("name,op,prep", _unary_cases(), ids=[c[0] for c in _unary_cases()])
@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**16))
def test_unary_jvp_matches_finite_differences(name, op, prep, seed):
    rng = np.random.default_rng(seed)
    x0 = prep(rng.normal(size=(3, 4)))
    proj = rng.normal(size=op(constant(x0)).value.shape)

    def f(v):
        return float(np.sum(op(constant(v)).value * proj))

    x = param(x0.copy(), "x")
    analytic = gradients(sum_(op(x) * constant(proj)))["x"]
    assert rel_error(analytic, numeric_grad(f, x0.copy())) < 1e-4


BINARY = [
    ("add", lambda a, b: a + b, (3, 4), (4,)),
    ("sub", lambda a, b: a - b, (3, 4), (3, 1)),
    ("mul", lambda a, b: a * b, (3, 4), (1, 4)),
    ("matmul", lambda a, b: a @ b, (3, 4), (4, 2)),
    ("batched_matmul", lambda a, b: a @ b, (2, 3, 4), (2, 4, 5)),
    ("concat", lambda a, b: concat([a, b], axis=0), (3, 4), (2, 4)),
    ("stack", lambda a, b: stack([a, b], axis=1), (3, 4), (3, 4)),
]


@pytest.mark.parametrize("name,op,sa,sb", BINARY, ids=[c[0] for c in BINARY])
@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**16))
def test_binary_jvp_matches_finite_differences(name, op, sa, sb, seed):
    rng = np.random.default_rng(seed)
    a0, b0 = rng.normal(size=sa), rng.normal(size=sb)
    proj = rng.normal(size=op(constant(a0), constant(b0)).value.shape)
    a, b = param(a0.copy(), "a"), param(b0.copy(), "b")
    g = gradients(sum_(op(a, b) * constant(proj)))
    fa = lambda v: float(np.sum(op(constant(v), constant(b0)).value * proj))
    fb = lambda v: float(np.sum(op(constant(a0), constant(v)).value * proj))
    assert rel_error(g["a"], numeric_grad(fa, a0.copy())) < 1e-4
    assert rel_error(g["b"], numeric_grad(fb, b0.copy())) < 1e-4


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**16))
def test_gradient_of_sum_is_sum_of_gradients(seed):
    rng = np.random.default_rng(seed)
    w = param(rng.normal(size=(4, 3)), "w")
    x = constant(rng.normal(size=(5, 4)))
    f1 = sum_(tanh(x @ w))
    f2 = mean(square(x @ w))
    g1, g2 = gradients(f1)["w"], gradients(f2)["w"]
    g12 = gradients(sum_(tanh(x @ w)) + mean(square(x @ w)))["w"]
    np.testing.assert_allclose(g12, g1 + g2, rtol=1e-12, atol=1e-14)


@given(arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(1, 6)),
              elements=st.floats(-700, 700, allow_nan=False, allow_infinity=False)))
def test_softmax_is_a_distribution(x):
    p = softmax(constant(x), axis=-1).value
    assert np.all(p >= 0)
    np.testing.assert_allclose(p.sum(axis=-1), 1.0, atol=1e-9)


def test_safe_log_is_finite_at_zero():
    assert np.isfinite(safe_log(constant(np.zeros(2))).value).all()


def test_lstm_cell_gradient_check():
    store = ParamStore(3)
    add_lstm(store, "cell", 4, 5)
    rng = np.random.default_rng(0)
    xs = rng.normal(size=(3, 2, 4))
    target = rng.normal(size=(2, 5))

    def loss(p):
        h, c = zero_state(2, 5)
        for x in xs:
            st_ = lstm_step(constant(x), h, c, p.node("cell.W"), p.node("cell.b"))
            h, c = st_.h, st_.c
        return sum_(square(h - constant(target)))

    assert grad_check(loss, store, step=1e-5, n_samples=None).max_rel_error < 1e-4


# ---------------------------------------------------------------- grad_check

def test_grad_check_quadratic():
    store = ParamStore(0)
    store.weight("w", (3, 2))
    result = grad_check(lambda p: sum_(square(p.node("w"))), store, n_samples=None)
    assert result.max_rel_error < 1e-8
    assert result.n_checked == 6


def test_grad_check_empty_model():
    result = grad_check(lambda p: sum_(constant(np.ones(2))), ParamStore(0))
    assert result.max_rel_error == 0.0 and result.n_checked == 0


def test_grad_check_non_finite_loss():
    store = ParamStore(0)
    store.add("w", np.array([0.0]))
    with pytest.raises(FloatingPointError):
        grad_check(lambda p: sum_(log(p.node("w"))), store)


def test_grad_check_detects_a_wrong_gradient():
    store = ParamStore(0)
    store.add("w", np.array([0.7, -0.3]))
    # detach half the function: its gradient is missing from the analytic side
    loss = lambda p: sum_(square(p.node("w"))) + sum_(constant(p["w"] ** 3))
    assert grad_check(loss, store, n_samples=None).max_rel_error > 1e-2


# ---------------------------------------------------------------- params and optimizer

def test_param_store_order_and_seeding():
    def build(seed):
        s = ParamStore(seed)
        s.weight("b", (2, 3))
        s.weight("a", (3,), fan_in=4)
        return s

    s1, s2 = build(5), build(5)
    assert s1.names() == ["b", "a"]
    for n in s1:
        assert s1[n].tobytes() == s2[n].tobytes()
    assert np.all(np.abs(s1["a"]) <= 0.5)
    assert not np.array_equal(build(6)["b"], s1["b"])


def test_union_shares_arrays():
    a, b = ParamStore(0), ParamStore(1)
    a.weight("x", (2,))
    b.weight("y", (2,))
    u = ParamStore.union(a, b)
    u["x"][0] = 42.0
    assert a["x"][0] == 42.0
    with pytest.raises(KeyError):
        ParamStore.union(a, a)


def test_frozen_store_yields_constants():
    s = ParamStore(0)
    s.weight("w", (2,))
    with s.frozen():
        assert s.node("w").kind == "const"
    assert s.node("w").kind == "param"


def test_rmsprop_hand_example():
    s = ParamStore(0)
    s.add("theta", np.array([1.0]))
    state = OptimizerState(lr=0.01, rho=0.9, eps=1e-8)
    rmsprop_step(s, {"theta": np.array([1.0])}, state)
    assert state.accum["theta"][0] == pytest.approx(0.1)
    assert s["theta"][0] == pytest.approx(1 - 0.01 / (np.sqrt(0.1) + 1e-8), abs=1e-12)
    assert s["theta"][0] == pytest.approx(0.96838, abs=1e-5)


def test_rmsprop_zero_gradient_and_zero_rate():
    s = ParamStore(0)
    s.weight("w", (3,))
    before = s["w"].copy()
    rmsprop_step(s, {"w": np.zeros(3)}, OptimizerState())
    np.testing.assert_array_equal(s["w"], before)
    state = OptimizerState(lr=0.0)
    rmsprop_step(s, {"w": np.ones(3)}, state)
    np.testing.assert_array_equal(s["w"], before)
    np.testing.assert_allclose(state.accum["w"], 0.1)


@given(arrays(np.float64, 4, elements=finite), st.floats(0.5, 0.99))
def test_rmsprop_accumulator_nonnegative(g, rho):
    s = ParamStore(0)
    s.weight("w", (4,))
    state = OptimizerState(rho=rho)
    for _ in range(3):
        rmsprop_step(s, {"w": g}, state)
    assert np.all(state.accum["w"] >= 0)


def test_rmsprop_rejects_non_finite():
    s = ParamStore(0)
    s.weight("w", (2,))
    with pytest.raises(NonFiniteGradient):
        rmsprop_step(s, {"w": np.array([np.nan, 0.0])}, OptimizerState())


def test_clip_by_global_norm():
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    clipped, norm = clip_by_global_norm(grads, 1.0)
    assert norm == pytest.approx(5.0)
    assert np.sqrt(clipped["a"] ** 2 + clipped["b"] ** 2)[0] == pytest.approx(1.0)
    same, _ = clip_by_global_norm(grads, None)
    assert same is grads


# ---------------------------------------------------------------- checkpoint

def test_checkpoint_round_trip(tmp_path):
    s = ParamStore(9)
    s.weight("enc.W", (3, 4))
    s.bias("enc.b", (4,))
    path = tmp_path / "m.ckpt"
    checkpoint.save(path, s, "abc123", {"note": "x"})
    loaded, header = checkpoint.load(path)
    assert header["config_hash"] == "abc123" and header["seed"] == 9
    assert loaded.names() == s.names()
    for n in s:
        assert loaded[n].tobytes() == s[n].tobytes()
    assert checkpoint.dumps(loaded, "abc123", {"note": "x"}) == path.read_bytes()


def test_checkpoint_rejects_garbage():
    with pytest.raises(checkpoint.CheckpointError):
        checkpoint.loads(b"not a checkpoint at all")


def test_as_node_passthrough():
    n = constant(1.0)
    assert as_node(n) is n
