import numpy as np
import pytest

from sketchrl import neural
from sketchrl.errors import ShapeError, StateError, TrainingDivergenceError
from sketchrl.neural import tensor as T
from sketchrl.neural.backend import get_kernels


def naive_conv2d(x, w, b, stride, pad):
    """Loop reference for conv2d, independent of im2col."""
    n, cin, h, wd = x.shape
    cout, _, kh, kw = w.shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    out = np.zeros((n, cout, oh, ow), dtype=np.float64)
    for bi in range(n):
        for co in range(cout):
            for oy in range(oh):
                for ox in range(ow):
                    acc = 0.0
                    for ci in range(cin):
                        for ky in range(kh):
                            for kx in range(kw):
                                sy = oy * stride + ky - pad
                                sx = ox * stride + kx - pad
                                if 0 <= sy < h and 0 <= sx < wd:
                                    acc += x[bi, ci, sy, sx] * w[co, ci, ky, kx]
                    out[bi, co, oy, ox] = acc + b[co]
    return out


# ---- kernel backends -------------------------------------------------------

@pytest.mark.parametrize("name", ["numpy", "numba"])
def test_im2col_col2im_round_structure(name):
    k = get_kernels(name)
    rng = np.random.default_rng(0)
    x = rng.normal(size=(2, 9, 9, 3)).astype(np.float32)
    col = k.im2col(x, 4, 4, 2, 1)
    assert col.shape == (2 * 4 * 4, 16 * 3)
    back = k.col2im(col, 2, 9, 9, 3, 4, 4, 2, 1)
    assert back.shape == x.shape


def test_backend_parity():
    knp = get_kernels("numpy")
    knb = get_kernels("numba")
    rng = np.random.default_rng(1)
    x = rng.normal(size=(2, 8, 8, 3)).astype(np.float32)
    np.testing.assert_allclose(knp.im2col(x, 3, 3, 2, 1), knb.im2col(x, 3, 3, 2, 1), atol=1e-6)
    col = rng.normal(size=(2 * 4 * 4, 9 * 3)).astype(np.float32)
    np.testing.assert_allclose(
        knp.col2im(col, 2, 8, 8, 3, 3, 3, 2, 1), knb.col2im(col, 2, 8, 8, 3, 3, 3, 2, 1), atol=1e-5
    )
    imgs = rng.uniform(0, 1, size=(3, 12, 12, 3)).astype(np.float32)
    ms = np.stack([np.array([[0.9, 0.1, 0.5], [-0.1, 1.05, -0.3]]) for _ in range(3)])
    np.testing.assert_allclose(knp.affine_warp_batch(imgs, ms),
                               knb.affine_warp_batch(imgs, ms), atol=1e-5)
    grids = rng.uniform(-2, 2, size=(3, 2, 4, 4))
    np.testing.assert_allclose(knp.elastic_warp_batch(imgs, grids),
                               knb.elastic_warp_batch(imgs, grids), atol=1e-5)
    img = rng.uniform(0, 1, size=(16, 16, 3)).astype(np.float32)
    m = np.array([[0.9, 0.1, 0.5], [-0.1, 1.05, -0.3]])
    np.testing.assert_allclose(knp.affine_warp(img, m), knb.affine_warp(img, m), atol=1e-5)
    dx = rng.normal(size=(16, 16)).astype(np.float64)
    dy = rng.normal(size=(16, 16)).astype(np.float64)
    np.testing.assert_allclose(knp.grid_warp(img, dx, dy), knb.grid_warp(img, dx, dy), atol=1e-5)
    pts = np.array([[1.0, 1.0], [12.0, 5.0], [3.0, 14.0]])
    colors = np.array([[255, 255, 0], [0, 128, 255]], dtype=np.uint8)
    c1 = np.zeros((16, 16, 3), dtype=np.uint8)
    c2 = np.zeros((16, 16, 3), dtype=np.uint8)
    knp.draw_polyline(c1, pts, colors, 1)
    knb.draw_polyline(c2, pts, colors, 1)
    np.testing.assert_array_equal(c1, c2)
    knp.fill_disk(c1, 8, 8, 3, np.array([0, 255, 0], dtype=np.uint8))
    knb.fill_disk(c2, 8, 8, 3, np.array([0, 255, 0], dtype=np.uint8))
    np.testing.assert_array_equal(c1, c2)


# ---- forward ----------------------------------------------------------------

def test_dense_identity():
    rng = np.random.default_rng(0)
    layer = neural.Dense(4, 4, rng)
    layer.w.data = np.eye(4, dtype=np.float32)
    layer.b.data = np.zeros(4, dtype=np.float32)
    x = rng.normal(size=(3, 4)).astype(np.float32)
    out = layer(T.Tensor(x))
    np.testing.assert_allclose(out.data, x)


def test_relu_values():
    out = T.relu(T.Tensor(np.array([-1.0, 0.0, 2.0])))
    np.testing.assert_allclose(out.data, [0.0, 0.0, 2.0])


def test_dropout_rate_zero_is_identity():
    rng = np.random.default_rng(0)
    net = neural.Sequential([neural.Dense(5, 5, rng), neural.Dropout(0.0)])
    x = rng.normal(size=(2, 5)).astype(np.float32)
    train = neural.forward(net, x, "train", np.random.default_rng(1))
    ev = neural.forward(net, x, "eval")
    np.testing.assert_array_equal(train.data, ev.data)


def test_conv2d_matches_naive_reference():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(2, 3, 8, 8))
    w = rng.normal(size=(5, 3, 4, 4))
    b = rng.normal(size=5)
    out = T.conv2d(T.Tensor(x.transpose(0, 2, 3, 1)), T.Tensor(w), T.Tensor(b),
                   stride=2, pad=1)
    expected = naive_conv2d(x, w, b, 2, 1).transpose(0, 2, 3, 1)
    np.testing.assert_allclose(out.data, expected, atol=1e-10)


def test_conv_transpose_is_adjoint_of_conv():
    # <conv(x), y> == <x, conv_T(y)> with shared weights and zero bias
    rng = np.random.default_rng(4)
    x = rng.normal(size=(2, 8, 8, 3))
    w = rng.normal(size=(5, 3, 4, 4))  # (Cout, Cin, kh, kw)
    y = rng.normal(size=(2, 4, 4, 5))
    zeros5 = T.Tensor(np.zeros(5))
    zeros3 = T.Tensor(np.zeros(3))
    conv_x = T.conv2d(T.Tensor(x), T.Tensor(w), zeros5, stride=2, pad=1)
    # adjoint uses the same kernel with in/out roles swapped: (Cin=Cout, Cout=Cin, ...)
    tconv_y = T.conv2d_transpose(T.Tensor(y), T.Tensor(w), zeros3, stride=2, pad=1)
    lhs = float((conv_x.data * y).sum())
    rhs = float((x * tconv_y.data).sum())
    assert abs(lhs - rhs) < 1e-8 * max(1.0, abs(lhs))


def test_forward_shape_error():
    rng = np.random.default_rng(0)
    net = neural.Sequential([neural.Dense(4, 2, rng)])
    with pytest.raises(ValueError):
        neural.forward(net, np.zeros((3, 5), dtype=np.float32))


# ---- backward ---------------------------------------------------------------

def test_backward_single_dense_sum_loss():
    rng = np.random.default_rng(0)
    net = neural.Sequential([neural.Dense(3, 2, rng)])
    x = rng.normal(size=(1, 3)).astype(np.float32)
    out = neural.forward(net, x)
    grads = neural.backward(net, np.ones_like(out.data))
    # d/dW sum(x @ W + b) = outer(x, ones)
    np.testing.assert_allclose(grads[0], np.outer(x[0], np.ones(2)), atol=1e-6)
    np.testing.assert_allclose(grads[1], np.ones(2), atol=1e-6)


def test_backward_zero_upstream_gives_zero_grads():
    rng = np.random.default_rng(0)
    net = neural.Sequential([neural.Dense(3, 4, rng), neural.ReLU(), neural.Dense(4, 2, rng)])
    x = rng.normal(size=(2, 3)).astype(np.float32)
    out = neural.forward(net, x)
    grads = neural.backward(net, np.zeros_like(out.data))
    for g in grads:
        np.testing.assert_array_equal(g, np.zeros_like(g))


def test_backward_before_forward_raises():
    rng = np.random.default_rng(0)
    net = neural.Sequential([neural.Dense(3, 2, rng)])
    with pytest.raises(StateError):
        neural.backward(net, np.zeros((1, 2)))


@pytest.mark.parametrize("specs,in_shape", [
    ([neural.LayerSpec("dense", {"in_size": 6, "out_size": 4})], (3, 6)),
    ([neural.LayerSpec("conv2d", {"in_ch": 2, "out_ch": 3, "kernel": 4, "stride": 2, "pad": 1})],
     (2, 8, 8, 2)),
    ([neural.LayerSpec("transposed_conv2d",
                       {"in_ch": 3, "out_ch": 2, "kernel": 4, "stride": 2, "pad": 1})],
     (2, 4, 4, 3)),
    ([neural.LayerSpec("dense", {"in_size": 5, "out_size": 5}), neural.LayerSpec("relu")], (2, 5)),
    ([neural.LayerSpec("dense", {"in_size": 5, "out_size": 5}), neural.LayerSpec("tanh")], (2, 5)),
    ([neural.LayerSpec("dense", {"in_size": 5, "out_size": 5}), neural.LayerSpec("sigmoid")], (2, 5)),
    ([neural.LayerSpec("conv2d", {"in_ch": 1, "out_ch": 2, "kernel": 3, "stride": 1, "pad": 1}),
      neural.LayerSpec("flatten"),
      neural.LayerSpec("dense", {"in_size": 2 * 36, "out_size": 3})], (1, 6, 6, 1)),
])
def test_gradient_check_per_layer_kind(specs, in_shape):
    rng = np.random.default_rng(7)
    net = neural.Sequential.from_specs(specs, rng)
    x = rng.normal(size=in_shape).astype(np.float32)
    assert neural.gradient_check(net, x, eps=1e-3) < 1e-3


def test_gradient_check_linear_net_machine_precision():
    rng = np.random.default_rng(9)
    net = neural.Sequential.from_specs(
        [neural.LayerSpec("dense", {"in_size": 4, "out_size": 3})], rng, dtype=np.float64
    )
    x = rng.normal(size=(2, 4))
    assert neural.gradient_check(net, x, eps=1e-4) < 1e-8


def test_gradient_check_dropout_with_pinned_mask():
    rng = np.random.default_rng(11)
    net = neural.Sequential.from_specs(
        [neural.LayerSpec("dense", {"in_size": 6, "out_size": 6}),
         neural.LayerSpec("relu"),
         neural.LayerSpec("dropout", {"rate": 0.5}),
         neural.LayerSpec("dense", {"in_size": 6, "out_size": 2})], rng
    )
    x = rng.normal(size=(3, 6)).astype(np.float32)
    assert neural.gradient_check(net, x, eps=1e-3, mode="train", seed=5) < 1e-3


# ---- adam -------------------------------------------------------------------

def test_adam_zero_grad_fixed_point():
    rng = np.random.default_rng(0)
    net = neural.Sequential([neural.Dense(3, 3, rng)])
    before = [p.data.copy() for p in net.params()]
    state = neural.AdamState(lr=1e-3)
    neural.adam_step(state, net.params(), [np.zeros_like(p.data) for p in net.params()])
    for b, p in zip(before, net.params()):
        np.testing.assert_array_equal(b, p.data)


def test_adam_first_step_bias_corrected_magnitude():
    p = T.Tensor(np.zeros(1, dtype=np.float64), requires_grad=True)
    state = neural.AdamState(lr=1e-3)
    neural.adam_step(state, [p], [np.ones(1)])
    expected = -1e-3 / (1.0 + 1e-8)  # ~ -9.99999e-4
    assert abs(p.data[0] - expected) < 1e-12


def test_adam_decreases_convex_quadratic():
    p = T.Tensor(np.array([2.0, -3.0]), requires_grad=True)
    state = neural.AdamState(lr=0.1)

    def loss():
        return float((p.data ** 2).sum())

    l0 = loss()
    for _ in range(2):
        neural.adam_step(state, [p], [2.0 * p.data])
    assert loss() < l0


def test_adam_rejects_nonfinite_grad():
    p = T.Tensor(np.zeros(2), requires_grad=True)
    with pytest.raises(TrainingDivergenceError):
        neural.adam_step(neural.AdamState(), [p], [np.array([np.nan, 0.0])])


# ---- serialization ----------------------------------------------------------

def test_weight_file_round_trip(tmp_path):
    rng = np.random.default_rng(13)
    net = neural.Sequential.from_specs(
        [neural.LayerSpec("conv2d", {"in_ch": 2, "out_ch": 4, "kernel": 3, "stride": 2, "pad": 1}),
         neural.LayerSpec("relu"),
         neural.LayerSpec("flatten"),
         neural.LayerSpec("dense", {"in_size": 4 * 16, "out_size": 5})], rng
    )
    path = tmp_path / "weights.bin"
    neural.save_layers(path, [net])
    clone = neural.Sequential.from_specs(net.specs(), np.random.default_rng(99))
    neural.load_layers(path, [clone])
    for a, b in zip(net.params(), clone.params()):
        np.testing.assert_array_equal(a.data, b.data)
    x = rng.normal(size=(2, 8, 8, 2)).astype(np.float32)
    np.testing.assert_array_equal(neural.forward(net, x).data, neural.forward(clone, x).data)


def test_weight_file_rejects_wrong_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOTAFILE" + b"\x00" * 16)
    with pytest.raises(ShapeError):
        neural.read_layer_arrays(path)


def test_training_step_bit_reproducible():
    def run():
        rng = np.random.default_rng(42)
        net = neural.Sequential.from_specs(
            [neural.LayerSpec("dense", {"in_size": 4, "out_size": 8}),
             neural.LayerSpec("relu"),
             neural.LayerSpec("dense", {"in_size": 8, "out_size": 2})], rng
        )
        state = neural.AdamState(lr=1e-3)
        data_rng = np.random.default_rng(7)
        for _ in range(5):
            x = data_rng.normal(size=(4, 4)).astype(np.float32)
            y = data_rng.normal(size=(4, 2)).astype(np.float32)
            out = neural.forward(net, x)
            loss = T.mse(out, T.Tensor(y))
            net.zero_grad()
            loss.backward()
            neural.adam_step(state, net.params())
        return [p.data.copy() for p in net.params()]

    a = run()
    b = run()
    for pa, pb in zip(a, b):
        np.testing.assert_array_equal(pa, pb)
