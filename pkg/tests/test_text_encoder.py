import math

import numpy as np
import pytest

from emofuse import autodiff as ad
from emofuse.autodiff import Tensor, grad_check
from emofuse.exceptions import ShapeError
from emofuse.text_encoder import (
    BiLstmParams,
    LstmDirectionParams,
    TextEncoderParams,
    bilstm_layer,
    emoji_input_features,
    encode_text,
    positional_encoding,
)
from emofuse.tokenization import tokenize, split_modalities
from emofuse.vgae import EmojiEmbeddings


class TestPositionalEncoding:
    def test_position_zero_alternates_zero_one(self):
        pe = positional_encoding(0, 8)
        np.testing.assert_array_equal(pe, [0, 1, 0, 1, 0, 1, 0, 1])

    def test_direct_evaluation_pos1_d4(self):
        pe = positional_encoding(1, 4, base=1000.0)
        expected = [math.sin(1.0), math.cos(1.0),
                    math.sin(1000.0 ** -0.5), math.cos(1000.0 ** -0.5)]
        np.testing.assert_allclose(pe, expected, atol=1e-12)
        # frozen values from evaluating the formulas by hand
        np.testing.assert_allclose(pe, [0.8415, 0.5403, 0.0316, 0.9995], atol=5e-5)

    def test_entries_bounded(self):
        for pos in (0, 3, 17, 500):
            assert np.abs(positional_encoding(pos, 12)).max() <= 1.0

    def test_odd_dimension_rejected(self):
        with pytest.raises(ValueError):
            positional_encoding(1, 5)

    def test_matches_formula_for_many_positions(self):
        base, d = 1000.0, 10
        for pos in (0, 1, 2, 11, 63):
            pe = positional_encoding(pos, d, base)
            for i in range(d // 2):
                angle = pos / base ** (2 * i / d)
                assert pe[2 * i] == pytest.approx(math.sin(angle), abs=1e-12)
                assert pe[2 * i + 1] == pytest.approx(math.cos(angle), abs=1e-12)

    def test_fixed_offset_is_trigonometric_combination(self):
        # sin((pos+t)/f) = sin(pos/f)cos(t/f) + cos(pos/f)sin(t/f), same for cos
        base, d = 1000.0, 16
        rng = np.random.default_rng(0)
        for _ in range(20):
            pos, t = int(rng.integers(0, 200)), int(rng.integers(0, 50))
            pe_pos = positional_encoding(pos, d, base)
            pe_shift = positional_encoding(pos + t, d, base)
            for i in range(d // 2):
                freq = 1.0 / base ** (2 * i / d)
                s, c = pe_pos[2 * i], pe_pos[2 * i + 1]
                st, ct = math.sin(t * freq), math.cos(t * freq)
                assert pe_shift[2 * i] == pytest.approx(s * ct + c * st, abs=1e-10)
                assert pe_shift[2 * i + 1] == pytest.approx(c * ct - s * st, abs=1e-10)


class TestEmojiInputFeatures:
    def make_embeddings(self, dim=6):
        rng = np.random.default_rng(1)
        return EmojiEmbeddings(ids=["\U0001F600", "\U0001F622"],
                               vectors=rng.standard_normal((2, dim)))

    def test_position_zero_adds_alternating_pattern(self):
        emb = self.make_embeddings()
        _, emojis = split_modalities(tokenize("\U0001F600 hello"))
        feats = emoji_input_features(emojis, emb)
        expected = emb.get("\U0001F600") + np.array([0, 1, 0, 1, 0, 1])
        np.testing.assert_allclose(feats.features[0], expected, atol=1e-12)

    def test_no_emojis_empty_matrix(self):
        feats = emoji_input_features([], self.make_embeddings())
        assert feats.features.shape == (0, 6)

    def test_same_emoji_two_positions_differ_by_pe(self):
        emb = self.make_embeddings()
        _, emojis = split_modalities(tokenize("\U0001F600 a b c d e f \U0001F600"))
        feats = emoji_input_features(emojis, emb)
        diff = feats.features[0] - feats.features[1]
        expected = positional_encoding(0, 6) - positional_encoding(7, 6)
        np.testing.assert_allclose(diff, expected, atol=1e-12)

    def test_unknown_emoji_is_pure_positional(self):
        emb = self.make_embeddings()
        _, emojis = split_modalities(tokenize("\U0001F916"))  # robot, not in table
        feats = emoji_input_features(emojis, emb)
        np.testing.assert_allclose(feats.features[0], positional_encoding(0, 6), atol=1e-12)


def scalar_lstm_unroll(xs, wx, wh, b):
    """Hand-unrolled single-unit LSTM over a scalar input sequence."""
    def sig(v):
        return 1.0 / (1.0 + math.exp(-v))
    h, c = 0.0, 0.0
    outputs = []
    for x in xs:
        zi = x * wx[0] + h * wh[0] + b[0]
        zf = x * wx[1] + h * wh[1] + b[1]
        zg = x * wx[2] + h * wh[2] + b[2]
        zo = x * wx[3] + h * wh[3] + b[3]
        c = sig(zf) * c + sig(zi) * math.tanh(zg)
        h = sig(zo) * math.tanh(c)
        outputs.append(h)
    return outputs


class TestBiLstmLayer:
    def test_zero_parameters_give_zero_outputs(self):
        params = BiLstmParams(
            forward=LstmDirectionParams(w_x=Tensor(np.zeros((3, 4))), w_h=Tensor(np.zeros((1, 4))),
                                        b=Tensor(np.zeros(4))),
            backward=LstmDirectionParams(w_x=Tensor(np.zeros((3, 4))), w_h=Tensor(np.zeros((1, 4))),
                                         b=Tensor(np.zeros(4))),
            hidden=1,
        )
        out = bilstm_layer(Tensor(np.ones((4, 3))), params)
        np.testing.assert_array_equal(out.data, np.zeros((4, 2)))

    def test_single_step_sequence(self):
        params = BiLstmParams.create(3, 2, np.random.default_rng(0))
        out = bilstm_layer(Tensor(np.ones((1, 3))), params)
        assert out.data.shape == (1, 4)
        assert np.isfinite(out.data).all()

    def test_matches_scalar_unroll(self):
        rng = np.random.default_rng(2)
        wx_f = rng.standard_normal((1, 4))
        wh_f = rng.standard_normal((1, 4))
        b_f = rng.standard_normal(4)
        wx_b = rng.standard_normal((1, 4))
        wh_b = rng.standard_normal((1, 4))
        b_b = rng.standard_normal(4)
        params = BiLstmParams(
            forward=LstmDirectionParams(w_x=Tensor(wx_f), w_h=Tensor(wh_f), b=Tensor(b_f)),
            backward=LstmDirectionParams(w_x=Tensor(wx_b), w_h=Tensor(wh_b), b=Tensor(b_b)),
            hidden=1,
        )
        xs = [0.7, -1.3]
        out = bilstm_layer(Tensor(np.array(xs).reshape(2, 1)), params)
        fwd = scalar_lstm_unroll(xs, wx_f[0], wh_f[0], b_f)
        bwd = scalar_lstm_unroll(xs[::-1], wx_b[0], wh_b[0], b_b)[::-1]
        np.testing.assert_allclose(out.data[:, 0], fwd, atol=1e-12)
        np.testing.assert_allclose(out.data[:, 1], bwd, atol=1e-12)

    def test_empty_sequence_rejected(self):
        params = BiLstmParams.create(3, 2, np.random.default_rng(0))
        with pytest.raises(ShapeError):
            bilstm_layer(Tensor(np.zeros((0, 3))), params)


class TestEncodeText:
    def test_output_shapes(self, word_table):
        params = TextEncoderParams.create(word_table.dimension, 4, np.random.default_rng(0))
        words, _ = split_modalities(tokenize("happy dog music"))
        encoded = encode_text(words, word_table, params)
        assert encoded.embeddings.data.shape == (3, 300)
        assert encoded.lstm1.data.shape == (3, 8)
        assert encoded.lstm2.data.shape == (3, 8)
        assert encoded.stacked.data.shape == (3, 300 + 16)

    def test_stacked_is_feature_concatenation(self, word_table):
        params = TextEncoderParams.create(word_table.dimension, 3, np.random.default_rng(1))
        words, _ = split_modalities(tokenize("sun and rain"))
        encoded = encode_text(words, word_table, params)
        rebuilt = np.concatenate(
            [encoded.embeddings.data, encoded.lstm1.data, encoded.lstm2.data], axis=1)
        np.testing.assert_array_equal(encoded.stacked.data, rebuilt)

    def test_unknown_words_look_up_zeros(self, word_table):
        params = TextEncoderParams.create(word_table.dimension, 2, np.random.default_rng(2))
        words, _ = split_modalities(tokenize("zzzzq xxrrk"))
        encoded = encode_text(words, word_table, params)
        assert not encoded.embeddings.data.any()

    def test_word_order_changes_recurrent_features(self, word_table):
        params = TextEncoderParams.create(word_table.dimension, 3, np.random.default_rng(3))
        fwd, _ = split_modalities(tokenize("happy sad love"))
        rev, _ = split_modalities(tokenize("love sad happy"))
        out_fwd = encode_text(fwd, word_table, params)
        out_rev = encode_text(rev, word_table, params)
        assert not np.allclose(out_fwd.lstm1.data, out_rev.lstm1.data)

    def test_empty_words_rejected(self, word_table):
        params = TextEncoderParams.create(word_table.dimension, 2, np.random.default_rng(4))
        with pytest.raises(ShapeError):
            encode_text([], word_table, params)


class TestBiLstmGradients:
    def test_stacked_layers_pass_grad_check(self):
        rng = np.random.default_rng(6)
        params = TextEncoderParams.create(3, 2, rng)
        x = Tensor(rng.standard_normal((3, 3)), requires_grad=True)
        weights = rng.standard_normal((3, 4))

        def f(t):
            h1 = bilstm_layer(t, params.layer1)
            h2 = bilstm_layer(h1, params.layer2)
            return ad.mean(ad.mul(h2, weights))

        assert grad_check(f, x) < 1e-4
        for tensor in params.as_list():
            assert grad_check(lambda t: f(x), tensor) < 1e-4
