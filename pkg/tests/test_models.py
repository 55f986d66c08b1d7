import numpy as np
import pytest

from stnet.errors import ConfigError, FormatError, IntegrityError, ShapeError, WeightImportError
from stnet.layers import Conv2D, Dense
from stnet.models import (
    VARIANTS,
    ModelConfig,
    build_model,
    count_parameters,
    desk_config,
    import_external_weights,
    load_checkpoint,
    full_config,
    read_container,
    save_checkpoint,
    vgg_weight_table,
    write_container,
)
from stnet.models.model import VGG_BLOCKS
from stnet.training import cross_entropy_grad, cross_entropy_loss, one_hot_batch


# -- independent shape arithmetic ------------------------------------------

def conv_params(k, cin, cout):
    return k * cin * cout + cout


def lstm_params(d, h):
    return 4 * h * (d + h + 1)


def custom_cnn_oracle(cfg):
    s, c, n = cfg.height, cfg.channels, 0
    w = cfg.width
    for f in cfg.cnn_filters:
        n += conv_params(9, c, f)
        s, w, c = (s - 2) // 2, (w - 2) // 2, f
    return n, s * w * c


def expected_parameters(cfg: ModelConfig) -> int:
    T, H, W, C = cfg.input_shape
    v = cfg.variant
    if v == "ConvLSTM":
        F, k = cfg.convlstm_filters, cfg.convlstm_kernel ** 2
        cell = k * C * 4 * F + k * F * 4 * F + 4 * F + 3 * H * W * F
        return cell + ((H // 2) * (W // 2) * F + 1) * 2
    if v == "C3D":
        f1, f2 = cfg.c3d_filters
        p = cfg.c3d_pool
        dims = [T, H, W]
        dims = [(d - 2) // q for d, q in zip(dims, p)]
        dims = [(d - 2) // q for d, q in zip(dims, p)]
        flat = dims[0] * dims[1] * dims[2] * f2
        return conv_params(27, C, f1) + conv_params(27, f1, f2) + (flat + 1) * cfg.head_hidden + (cfg.head_hidden + 1) * 2
    if v == "LRCN_CustomCNN":
        n, feat = custom_cnn_oracle(cfg)
        return n + 2 * lstm_params(feat, cfg.lstm_hidden) + (2 * cfg.lstm_hidden + 1) * 2
    if v == "LRCN_VGG":
        n, c, h, w = 0, C, H, W
        for b, (convs, width) in enumerate(zip(VGG_BLOCKS, cfg.vgg_widths), 1):
            for _ in range(convs):
                n += conv_params(9, c, width)
                c = width
            if b <= cfg.vgg_pool_blocks:
                h, w = h // 2, w // 2
        feat = h * w * c
        L = cfg.lstm_hidden
        return n + 2 * lstm_params(feat, L) + (2 * L + 1) * cfg.head_hidden + (cfg.head_hidden + 1) * 2
    if v == "CNN_Transformer":
        n, feat = custom_cnn_oracle(cfg)
        d, ff = cfg.d_model, cfg.d_ff
        block = 4 * d * d + 2 * 2 * d + (d * ff + ff) + (ff * d + d)
        return n + (feat + 1) * d + cfg.encoder_blocks * block + (d + 1) * 2
    raise AssertionError(v)


# frozen after first implementation; the oracle above re-derives them
GOLDEN_FULL = {
    "ConvLSTM": 947650,
    "LRCN_CustomCNN": 1767522,
    "LRCN_VGG": 19567170,
    "C3D": 14512034,
    "CNN_Transformer": 398562,
}
GOLDEN_DESK = {"ConvLSTM": 19330, "LRCN_CustomCNN": 144738, "LRCN_VGG": 167242, "C3D": 13066, "CNN_Transformer": 38402}


@pytest.mark.parametrize("variant", VARIANTS)
def test_parameter_counts_match_shape_arithmetic(variant):
    for cfg, golden in ((full_config(variant), GOLDEN_FULL), (desk_config(variant), GOLDEN_DESK)):
        m = build_model(cfg)
        assert m.count_parameters() == expected_parameters(cfg) == golden[variant]


def test_count_parameters_examples():
    assert count_parameters(Dense(4, 2)) == 10
    assert count_parameters(Conv2D(3, 16, 3)) == 448
    assert count_parameters(None) == 0
    assert count_parameters({}) == 0


BLUEPRINTS = {
    "ConvLSTM": ["convlstm(32,3x3,same)", "maxpool2d(2x2)", "flatten", "dense(2)", "softmax"],
    "C3D": ["conv3d(64,3x3x3,valid)+relu", "maxpool3d(2x2x2)", "conv3d(32,3x3x3,valid)+relu", "maxpool3d(2x2x2)",
            "flatten", "dense(256)", "relu", "dropout(0.5)", "dense(2)", "softmax"],
    "LRCN_CustomCNN": [
        "time_distributed[conv2d(16,3x3,valid)+relu, maxpool2d(2x2), conv2d(32,3x3,valid)+relu, maxpool2d(2x2), "
        "conv2d(64,3x3,valid)+relu, maxpool2d(2x2), conv2d(64,3x3,valid)+relu, maxpool2d(2x2), flatten]",
        "bilstm(256)", "dense(2)", "softmax"],
    "CNN_Transformer": [
        "time_distributed[conv2d(16,3x3,valid)+relu, maxpool2d(2x2), conv2d(32,3x3,valid)+relu, maxpool2d(2x2), "
        "conv2d(64,3x3,valid)+relu, maxpool2d(2x2), conv2d(64,3x3,valid)+relu, maxpool2d(2x2), flatten]",
        "dense(128)", "positional_encoding", "encoder(128,4h)", "encoder(128,4h)", "mean_pool_time", "dense(2)",
        "softmax"],
}


@pytest.mark.parametrize("variant", sorted(BLUEPRINTS))
def test_blueprint_golden(variant):
    assert build_model(full_config(variant)).blueprint() == BLUEPRINTS[variant]


def test_vgg_blueprint_ladder_and_head():
    bp = build_model(full_config("LRCN_VGG")).blueprint()
    inner = bp[0][len("time_distributed["):-1].split(", ")
    assert sum(s.startswith("conv2d") for s in inner) == 13
    assert sum(s.startswith("maxpool2d") for s in inner) == 5
    assert all(s.endswith("same)+relu") for s in inner if s.startswith("conv2d"))
    assert bp[1:] == ["bilstm(256)", "dense(256)", "relu", "dense(2)", "softmax"]


def test_strict_input_shape():
    with pytest.raises(ConfigError):
        ModelConfig("C3D", frames=16).validate()
    with pytest.raises(ConfigError):
        ModelConfig("Nope").validate()
    ModelConfig("C3D", frames=16, strict=False).validate()


def test_too_small_input_is_config_error():
    with pytest.raises(ConfigError):
        build_model(desk_config("LRCN_CustomCNN").replace(cnn_filters=(4, 4, 4, 4)))


@pytest.mark.parametrize("variant", VARIANTS)
def test_forward_contract(variant):
    m = build_model(desk_config(variant), seed=1)
    x = np.random.default_rng(0).random((2, *m.config.input_shape), dtype=np.float32)
    p = m.predict(x)
    assert p.shape == (2, 2)
    np.testing.assert_allclose(p.sum(axis=1), 1, atol=1e-6)
    np.testing.assert_array_equal(p, m.predict(x))
    with pytest.raises(ShapeError):
        m.predict(x[:, :-1])


@pytest.mark.parametrize("variant", VARIANTS)
def test_every_parameter_gets_a_gradient_and_a_small_step_helps(variant):
    m = build_model(desk_config(variant), seed=2).astype(np.float64)
    m.config = m.config.replace(dropout=0.0)
    x = np.random.default_rng(3).random((2, *m.config.input_shape))
    t = one_hot_batch([0, 1], dtype=np.float64)
    probs, cache = m.forward(x, cache=True)
    loss0 = cross_entropy_loss(probs, t)
    grads = m.backward(cache, cross_entropy_grad(probs, t))
    params = m.parameters()
    assert set(grads) == set(params)
    assert all(np.any(g != 0) for k, g in grads.items() if not k.endswith((".wci", ".wcf", ".wco"))), \
        [k for k, g in grads.items() if not np.any(g)]
    for k in params:
        params[k] -= 1e-4 * grads[k]
    assert cross_entropy_loss(m.predict(x), t) < loss0


# -- checkpoints -----------------------------------------------------------

def test_checkpoint_round_trip_is_bit_exact(tmp_path):
    m = build_model(desk_config("CNN_Transformer"), seed=5)
    save_checkpoint(m, tmp_path / "m.ckpt", epoch=3)
    m2, meta = load_checkpoint(tmp_path / "m.ckpt")
    assert meta["epoch"] == 3 and m2.config == m.config
    for (ka, a), (kb, b) in zip(m.parameters().items(), m2.parameters().items()):
        assert ka == kb and a.dtype == b.dtype
        assert a.tobytes() == b.tobytes()


def test_checkpoint_truncated_and_corrupt(tmp_path):
    m = build_model(desk_config("C3D"))
    path = tmp_path / "m.ckpt"
    save_checkpoint(m, path)
    data = path.read_bytes()
    for bad in (data[:-7], data[:20], b"XXXXXXXX" + data[8:], data + b"\0"):
        path.write_bytes(bad)
        with pytest.raises(FormatError):
            load_checkpoint(path)


def test_checkpoint_wrong_variant(tmp_path):
    save_checkpoint(build_model(desk_config("C3D")), tmp_path / "c3d.ckpt")
    with pytest.raises(IntegrityError, match=r"convlstm\.cell\.Wx"):
        load_checkpoint(tmp_path / "c3d.ckpt", desk_config("ConvLSTM"))


def test_load_failure_leaves_target_untouched(tmp_path):
    src = build_model(desk_config("C3D"), seed=1)
    params = src.parameters()
    tensors = [(k, v if k != "fc_out.A" else v[:, :-1]) for k, v in params.items()]
    write_container(tmp_path / "bad.ckpt", "C3D", {"config": src.config.to_dict()}, tensors)
    with pytest.raises(IntegrityError, match="fc_out.A"):
        load_checkpoint(tmp_path / "bad.ckpt")


# -- external VGG weights --------------------------------------------------

def _vgg_file(path, cfg, rng, break_name=None):
    tensors = []
    for name, shape in vgg_weight_table(cfg).items():
        if name == break_name:
            shape = (*shape[:-1], shape[-1] + 1)
        tensors.append((name, rng.normal(size=shape).astype(np.float32)))
    write_container(path, "vgg16", {}, tensors)
    return dict(tensors)


def test_import_full_vgg_weights(tmp_path, rng):
    m = build_model(desk_config("LRCN_VGG"))
    head = m.parameters()["fc_out.A"].copy()
    tensors = _vgg_file(tmp_path / "vgg.ckpt", m.config, rng)
    rep = import_external_weights(m, tmp_path / "vgg.ckpt")
    assert len(rep.loaded) == 13 and rep.skipped == []
    W = m.parameters()["backbone.inner.block1_conv1.W"]
    # stored kernels are cross-correlation kernels; ours are flipped
    np.testing.assert_array_equal(W, tensors["block1_conv1/kernel"][::-1, ::-1])
    np.testing.assert_array_equal(m.parameters()["fc_out.A"], head)


def test_import_misshapen_kernel_changes_nothing(tmp_path, rng):
    m = build_model(desk_config("LRCN_VGG"))
    before = {k: v.copy() for k, v in m.parameters().items()}
    _vgg_file(tmp_path / "vgg.ckpt", m.config, rng, break_name="block3_conv2/kernel")
    with pytest.raises(WeightImportError, match="block3_conv2"):
        import_external_weights(m, tmp_path / "vgg.ckpt")
    for k, v in m.parameters().items():
        np.testing.assert_array_equal(v, before[k])


def test_import_empty_file_is_noop(tmp_path):
    m = build_model(desk_config("LRCN_VGG"))
    before = {k: v.copy() for k, v in m.parameters().items()}
    (tmp_path / "empty.ckpt").write_bytes(b"")
    rep = import_external_weights(m, tmp_path / "empty.ckpt")
    assert rep.loaded == [] and rep.skipped == []
    assert all(np.array_equal(v, before[k]) for k, v in m.parameters().items())


def test_container_tag_and_metadata(tmp_path):
    write_container(tmp_path / "x", "tag", {"a": 1}, [("w", np.arange(6, dtype=np.float32).reshape(2, 3))])
    tag, meta, tensors = read_container(tmp_path / "x")
    assert tag == "tag" and meta == {"a": 1}
    assert tensors[0][0] == "w" and tensors[0][1].shape == (2, 3)
