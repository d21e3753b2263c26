import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from segharmony import autodiff as ad
from segharmony.autodiff import Adam, Linear, Module, check_grads, parameter, tensor
from segharmony.errors import ContractError, DimensionError, DomainError, TrainingError

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


def p(x):
    return tensor(np.asarray(x, dtype=np.float64), requires_grad=True)


# -- forward values -----------------------------------------------------------
def test_matmul_examples():
    A = tensor([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal((tensor(np.eye(2)) @ A).data, A.data)
    assert (tensor([[1.0, 0.0]]) @ tensor([[0.0], [5.0]])).data.tolist() == [[0.0]]
    assert (A @ tensor([[5.0, 6.0], [7.0, 8.0]])).data.tolist() == [[19, 22], [43, 50]]


def test_matmul_shape_mismatch():
    with pytest.raises(DimensionError):
        ad.matmul(tensor(np.ones((2, 3))), tensor(np.ones((2, 3))))


def test_softmax_examples():
    np.testing.assert_allclose(ad.softmax_rows(tensor([0.0, 0.0])).data, [0.5, 0.5])
    np.testing.assert_allclose(ad.softmax_rows(tensor([1000.0, 1000.0])).data, [0.5, 0.5])
    np.testing.assert_allclose(ad.softmax_rows(tensor([0.0, math.log(3)])).data, [0.25, 0.75], atol=1e-15)


def test_elementwise_examples():
    x = p(0.0)
    y = ad.elementwise(x, "tanh")
    assert y.item() == 0.0
    ad.backward(y, [x])
    assert x.grad == pytest.approx(1.0)
    assert ad.elementwise(tensor(0.0), "exp").item() == 1.0
    assert ad.elementwise(tensor([1.0, 2.0]), "concat_last_dim", tensor([3.0])).data.tolist() == [1, 2, 3]
    with pytest.raises(ContractError):
        ad.elementwise(x, "nope")


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_log_domain(bad):
    with pytest.raises(DomainError):
        ad.log(tensor([1.0, bad]))


def test_cross_entropy_examples():
    assert ad.cross_entropy(tensor([[1.0, 0.0]]), tensor([[1.0, 0.0]])).item() <= 1e-12
    assert ad.cross_entropy(tensor([[0.5, 0.5]]), tensor([[1.0, 0.0]])).item() == pytest.approx(math.log(2))
    assert ad.cross_entropy(tensor([[0.25, 0.75]]), tensor([[0.0, 1.0]])).item() == pytest.approx(0.2877, abs=1e-4)
    assert ad.cross_entropy(tensor([[0.0, 1.0]]), tensor([[1.0, 0.0]])).item() == pytest.approx(-math.log(1e-12))
    with pytest.raises(DimensionError):
        ad.cross_entropy(tensor([[0.5, 0.5]]), tensor([[1.0, 0.0, 0.0]]))


def test_mse_examples():
    assert ad.mse(tensor([1.0, 2.0]), tensor([1.0, 2.0])).item() == 0.0
    assert ad.mse(tensor([0.0, 0.0]), tensor([1.0, 1.0])).item() == 1.0
    assert ad.mse(tensor([1.0, 2.0]), tensor([3.0, 5.0])).item() == 6.5
    with pytest.raises(DimensionError):
        ad.mse(tensor([1.0]), tensor([1.0, 2.0]))


# -- backward -------------------------------------------------------------------
def test_backward_examples():
    x = p(3.0)
    ad.backward(x * x, [x])
    assert x.grad == 6.0
    x = p(0.0)
    ad.backward(ad.tanh(x), [x])
    assert x.grad == 1.0


def test_backward_requires_scalar():
    x = p([1.0, 2.0])
    with pytest.raises(ContractError):
        ad.backward(x * 2.0)


def test_softmax_cross_entropy_composite_matches_fd():
    z = p([[0.3, -1.2], [2.0, 0.5]])
    target = tensor([[1.0, 0.0], [0.0, 1.0]])
    err = check_grads(lambda: ad.cross_entropy(ad.softmax_rows(z), target), [z])
    assert err < 1e-6


def test_unused_parameter_gets_exact_zero():
    a, b = p([1.0, 2.0]), p([5.0])
    b.grad = np.array([99.0])
    ad.backward(ad.tsum(a * a), [a, b])
    assert b.grad.tolist() == [0.0]


def test_tape_is_reverse_topological():
    x = p(2.0)
    y = x * x
    z = ad.tanh(y) + y
    tape = ad.Tape(z)
    pos = {id(n): i for i, n in enumerate(tape.order)}
    assert pos[id(x)] < pos[id(y)] < pos[id(z)]


def test_non_parameters_untouched():
    x = p([1.0])
    c = tensor([3.0])
    ad.backward(ad.tsum(x * c), [x])
    assert c.grad is None


# one finite-difference case per differentiable operation
RNG = np.random.default_rng(7)
POS = RNG.uniform(0.5, 2.0, (3, 4))
M = RNG.normal(size=(3, 4))
N = RNG.normal(size=(4, 2))
SIMPLEX = np.array([[0.2, 0.3, 0.5], [0.6, 0.1, 0.3]])

OPS = {
    "add": (lambda a, b: ad.tsum(ad.add(a, b) * ad.add(a, b)), [M, M[0]]),
    "sub": (lambda a, b: ad.tsum(ad.sub(a, b) ** 2), [M, M[:, :1]]),
    "mul": (lambda a, b: ad.tsum(ad.mul(a, b)), [M, POS]),
    "div": (lambda a, b: ad.tsum(ad.div(a, b)), [M, POS]),
    "scale": (lambda a: ad.tsum(ad.scale(a, -1.7) * a), [M]),
    "power": (lambda a: ad.tsum(ad.power(a, 1.5)), [POS]),
    "tanh": (lambda a: ad.tsum(ad.tanh(a)), [M]),
    "exp": (lambda a: ad.tsum(ad.exp(a)), [M]),
    "log": (lambda a: ad.tsum(ad.log(a)), [POS]),
    "relu": (lambda a: ad.tsum(ad.relu(a) * a), [M + 0.05]),
    "softplus": (lambda a: ad.tsum(ad.softplus(a)), [M]),
    "sigmoid": (lambda a: ad.tsum(ad.sigmoid(a) ** 2), [M]),
    "mean": (lambda a: ad.tsum(ad.mean(a, axis=0) ** 2), [M]),
    "reshape": (lambda a: ad.tsum(ad.reshape(a, (2, 6)) @ tensor(np.arange(6.0).reshape(6, 1))), [M]),
    "transpose": (lambda a: ad.tsum(ad.transpose(a) @ tensor(M)), [M]),
    "swap_last": (lambda a: ad.tsum(ad.swap_last(a) ** 3), [M]),
    "getitem": (lambda a: ad.tsum(ad.getitem(a, (slice(None), [0, 0, 2])) ** 2), [M]),
    "concat": (lambda a, b: ad.tsum(ad.concat((a, b), axis=0) ** 2), [M, POS]),
    "matmul": (lambda a, b: ad.tsum(ad.matmul(a, b) ** 2), [M, N]),
    "matmul_batched": (lambda a, b: ad.tsum(ad.matmul(a, b) ** 2),
                       [RNG.normal(size=(2, 3, 4)), RNG.normal(size=(4, 2))]),
    "softmax_rows": (lambda a: ad.tsum(ad.softmax_rows(a) * tensor(M)), [M]),
    "layer_norm": (lambda a, g, b: ad.tsum(ad.layer_norm(a, g, b) * tensor(M)),
                   [M, RNG.normal(size=4), RNG.normal(size=4)]),
    "unfold1d": (lambda a: ad.tsum(ad.unfold1d(a, 3, 2) ** 2), [RNG.normal(size=(2, 7, 3))]),
    "cross_entropy": (lambda a: ad.cross_entropy(a, tensor(SIMPLEX[::-1].copy())), [SIMPLEX]),
    "mse": (lambda a, b: ad.mse(a, b), [M, POS]),
}


@pytest.mark.parametrize("name", sorted(OPS))
def test_op_gradient_matches_finite_differences(name):
    fn, values = OPS[name]
    params = [p(v.copy()) for v in values]
    assert check_grads(lambda: fn(*params), params) < 1e-4


def test_dropout_gradient_uses_mask():
    x = p(np.ones((50,)))
    y = ad.dropout(x, 0.5, np.random.default_rng(0))
    ad.backward(ad.tsum(y), [x])
    np.testing.assert_array_equal(x.grad, y.data)
    assert ad.dropout(x, 0.5, None, training=False) is x


class TinyNet(Module):
    def __init__(self, rng, n_in, hidden):
        self.l1 = Linear(n_in, hidden, rng)
        self.l2 = Linear(hidden, 2, rng)

    def __call__(self, x):
        return ad.softmax_rows(self.l2(ad.tanh(self.l1(x))))


@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(1, 5))
def test_small_networks_gradcheck(seed, n_in, hidden):
    rng = np.random.default_rng(seed)
    net = TinyNet(rng, n_in, hidden)
    assert sum(q.data.size for q in net.parameters()) <= 64
    x = tensor(rng.normal(size=(3, n_in)))
    y = tensor(np.eye(2)[rng.integers(0, 2, 3)])
    assert check_grads(lambda: ad.cross_entropy(net(x), y), net.parameters()) < 1e-4


@given(arrays(np.float64, (3, 5), elements=finite), st.floats(-50, 50))
def test_softmax_rows_properties(a, shift):
    s = ad.softmax_rows(tensor(a)).data
    np.testing.assert_allclose(s.sum(axis=-1), 1.0, atol=1e-12)
    np.testing.assert_allclose(ad.softmax_rows(tensor(a + shift)).data, s, atol=1e-12)


@given(arrays(np.float64, (4,), elements=finite), arrays(np.float64, (4,), elements=finite))
def test_backward_is_linear(a, b):
    x = p(a.copy())
    t = tensor(b)

    def f1():
        return ad.tsum(ad.tanh(x) * t)

    def f2():
        return ad.tsum(x * x)

    ad.backward(f1(), [x])
    g1 = x.grad.copy()
    ad.backward(f2(), [x])
    g2 = x.grad.copy()
    ad.backward(f1() + f2(), [x])
    np.testing.assert_allclose(x.grad, g1 + g2, atol=1e-12)


@given(arrays(np.float64, (2, 3), elements=finite))
def test_forward_stays_finite(a):
    x = tensor(a)
    for y in (ad.tanh(x), ad.exp(x), ad.softplus(x), ad.sigmoid(x), ad.softmax_rows(x * 100.0)):
        assert np.all(np.isfinite(y.data))


# -- optimizer ------------------------------------------------------------------
def test_adam_zero_gradient_no_decay_keeps_params():
    w = parameter(np.array([1.5, -2.0]))
    opt = Adam({"w": w}, lr=0.1, weight_decay=0.0)
    opt.step({"w": np.zeros(2)})
    assert w.data.tolist() == [1.5, -2.0]


def test_adam_first_step_is_minus_lr_sign():
    w = parameter(np.array([0.0]))
    opt = Adam({"w": w}, lr=0.1, weight_decay=0.0)
    opt.step({"w": np.array([1.0])})
    assert w.data[0] == pytest.approx(-0.1, rel=1e-6)


def test_adam_descends_quadratic():
    w = parameter(np.array([1.0]))
    opt = Adam({"w": w}, lr=0.1, weight_decay=0.0)
    for step in range(500):
        ad.backward(ad.tsum(w * w), [w])
        opt.step()
        if abs(w.data[0]) < 1e-3:
            break
    assert abs(w.data[0]) < 1e-3
    assert step < 500


def test_adam_state_and_errors():
    w = parameter(np.ones((2, 3)))
    opt = Adam({"w": w})
    assert opt.lr == 1e-3 and opt.weight_decay == 1e-4
    for t in range(1, 4):
        opt.step({"w": np.ones((2, 3))})
        assert opt.step_count == t
        assert opt.m["w"].shape == w.data.shape == opt.v["w"].shape
    with pytest.raises(TrainingError, match="'w'"):
        opt.step({"w": np.full((2, 3), np.nan)})
    with pytest.raises(ContractError):
        Adam({"w": w}, lr=0.0)
    with pytest.raises(ContractError):
        Adam({"w": w}, weight_decay=-1.0)


def test_identical_seeds_give_identical_trajectories():
    def run(seed):
        rng = np.random.default_rng(seed)
        net = TinyNet(rng, 3, 4)
        opt = Adam(net.named_parameters(), lr=0.05)
        x = tensor(rng.normal(size=(8, 3)))
        y = tensor(np.eye(2)[rng.integers(0, 2, 8)])
        traj = []
        for _ in range(20):
            ad.backward(ad.cross_entropy(net(x), y), net.parameters())
            opt.step()
            traj.append(np.concatenate([q.data.ravel() for q in net.parameters()]))
        return np.stack(traj)

    a, b = run(3), run(3)
    assert a.tobytes() == b.tobytes()
    assert run(4).tobytes() != a.tobytes()


# -- checkpoint -----------------------------------------------------------------
def test_checkpoint_roundtrip(tmp_path, rng):
    net = TinyNet(rng, 3, 4)
    state = net.state_dict()
    manifest = {"config_hash": ad.config_hash({"a": 1}), "epoch": 3, "rng_state": {"x": [1, 2]}}
    path = tmp_path / "ckpt.zip"
    ad.save_checkpoint(path, state, manifest)
    loaded, man = ad.load_checkpoint(path)
    assert set(loaded) == set(state)
    for k in state:
        assert loaded[k].dtype == np.float64
        assert loaded[k].tobytes() == state[k].tobytes()
    assert man["epoch"] == 3 and man["config_hash"] == manifest["config_hash"]
    first = path.read_bytes()
    ad.save_checkpoint(path, state, manifest)
    assert path.read_bytes() == first


def test_config_hash_is_order_independent():
    assert ad.config_hash({"a": 1, "b": 2}) == ad.config_hash({"b": 2, "a": 1})
    assert ad.config_hash({"a": 1}) != ad.config_hash({"a": 2})
