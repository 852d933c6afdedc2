"""Deep LSTM encoder-decoder with attention: forward pass and gradients.

The encoder consumes the (already reversed) input word ids in one
left-to-right sweep through a stack of LSTM layers.  The decoder runs the
same kind of stack over output symbols, seeded with the encoder's final
states, and at every step attends over the encoder's top-layer h-sequence:

    u^t_i = v . tanh(W1p h_i + W2p d_t)       a^t = softmax(u^t)
    d'_t  = sum_i a^t_i h_i

The concatenation [d_t ; d'_t] produces the symbol distribution through the
output projection, and is also fed to the next time step: a learned
projection maps it back to hidden size and replaces the top decoder layer's
recurrent h input at t+1 (lower layers recur normally).  This routing is
recorded in checkpoints as the "top_h_proj" feedback variant.

Gradients are computed by explicit reverse-mode accumulation over the
cached forward quantities; ``sequence_log_prob`` returns the gradient of
the log probability (ascent direction), and callers that minimize negative
log likelihood negate it.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .numerics import softmax, uniform_init

# Output vocabularies reserve the sequence terminator at id 0; the decoder
# also uses it as the conventional start token.
END_ID = 0

FEEDBACK_VARIANT = "top_h_proj"


@dataclass
class Hyper:
    """Model shape and regularization settings."""

    layers: int
    hidden: int
    embed: int
    input_vocab: int
    output_vocab: int
    dropout: float = 0.0
    init_scale: float = 0.08

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("need at least one LSTM layer")
        for name in ("hidden", "embed", "input_vocab", "output_vocab"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout rate must lie in [0, 1)")

    def to_dict(self):
        return {
            "layers": self.layers, "hidden": self.hidden, "embed": self.embed,
            "input_vocab": self.input_vocab, "output_vocab": self.output_vocab,
            "dropout": self.dropout, "init_scale": self.init_scale,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class LstmState:
    """Control state h and memory state m of one layer."""

    h: np.ndarray
    m: np.ndarray


class LstmLayerParams:
    """Gate weights and initial states of one LSTM layer.

    Weights are stored stacked for the cell kernels: ``wx`` is (4H x In)
    over the layer input, ``wh`` is (4H x H) over the recurrent state, row
    blocks ordered [i, i', f, o].  The eight classical gate matrices are
    views into the stacks:

        W1 = input->i     W2 = recurrent->i
        W3 = input->i'    W4 = recurrent->i'
        W5 = input->f     W6 = recurrent->f
        W7 = input->o     W8 = recurrent->o
    """

    def __init__(self, wx, wh, h0, m0):
        hidden = wh.shape[1]
        if wx.shape[0] != 4 * hidden or wh.shape[0] != 4 * hidden:
            raise ValueError(
                f"stacked weights need 4 x hidden rows: wx {wx.shape}, "
                f"wh {wh.shape}, hidden {hidden}")
        if h0.shape != (hidden,) or m0.shape != (hidden,):
            raise ValueError("h0/m0 must be hidden-sized vectors")
        self.wx = wx
        self.wh = wh
        self.h0 = h0
        self.m0 = m0

    @property
    def hidden(self):
        return self.wh.shape[1]

    @property
    def input_size(self):
        return self.wx.shape[1]

    def _block(self, stack, k):
        return stack[k * self.hidden:(k + 1) * self.hidden]

    @property
    def w1(self):
        return self._block(self.wx, 0)

    @property
    def w2(self):
        return self._block(self.wh, 0)

    @property
    def w3(self):
        return self._block(self.wx, 1)

    @property
    def w4(self):
        return self._block(self.wh, 1)

    @property
    def w5(self):
        return self._block(self.wx, 2)

    @property
    def w6(self):
        return self._block(self.wh, 2)

    @property
    def w7(self):
        return self._block(self.wx, 3)

    @property
    def w8(self):
        return self._block(self.wh, 3)


def _init_layer(rng, n_in, hidden, scale):
    return LstmLayerParams(
        wx=uniform_init(rng, (4 * hidden, n_in), scale),
        wh=uniform_init(rng, (4 * hidden, hidden), scale),
        h0=uniform_init(rng, (hidden,), scale),
        m0=uniform_init(rng, (hidden,), scale),
    )


class ModelParams:
    """All trainable arrays of the parser.

    Fields:
        embedding      (input_vocab, embed)   input word vectors
        out_embedding  (output_vocab, embed)  decoder symbol vectors
        encoder_layers / decoder_layers       LstmLayerParams stacks
        att_v          (hidden,)              attention scoring vector
        att_w1p        (hidden, hidden)       attention, encoder side
        att_w2p        (hidden, hidden)       attention, decoder side
        feedback       (hidden, 2 hidden)     [d ; d'] -> next-step input
        out_proj       (output_vocab, 2 hidden) symbol logits

    The decoder starts from the encoder's final states, so the decoder
    layers' h0/m0 never enter the computation; they are kept so both
    stacks share one layer type, and their gradients are identically zero.
    """

    def __init__(self, hyper, embedding, out_embedding, encoder_layers,
                 decoder_layers, att_v, att_w1p, att_w2p, feedback, out_proj):
        if len(encoder_layers) != hyper.layers or len(decoder_layers) != hyper.layers:
            raise ValueError("layer stacks must match hyper.layers")
        h = hyper.hidden
        if att_w1p.shape != (h, h) or att_w2p.shape != (h, h):
            raise ValueError("attention projections must be hidden x hidden")
        if att_v.shape != (h,):
            raise ValueError("attention vector must be hidden-sized")
        if feedback.shape != (h, 2 * h):
            raise ValueError("feedback projection must be hidden x 2 hidden")
        if out_proj.shape != (hyper.output_vocab, 2 * h):
            raise ValueError("output projection must be output_vocab x 2 hidden")
        self.hyper = hyper
        self.embedding = embedding
        self.out_embedding = out_embedding
        self.encoder_layers = list(encoder_layers)
        self.decoder_layers = list(decoder_layers)
        self.att_v = att_v
        self.att_w1p = att_w1p
        self.att_w2p = att_w2p
        self.feedback = feedback
        self.out_proj = out_proj

    def param_items(self):
        """(name, array) pairs in a fixed canonical order."""
        yield "embedding", self.embedding
        yield "out_embedding", self.out_embedding
        for prefix, stack in (("enc", self.encoder_layers),
                              ("dec", self.decoder_layers)):
            for i, layer in enumerate(stack):
                yield f"{prefix}{i}.wx", layer.wx
                yield f"{prefix}{i}.wh", layer.wh
                yield f"{prefix}{i}.h0", layer.h0
                yield f"{prefix}{i}.m0", layer.m0
        yield "att.v", self.att_v
        yield "att.w1p", self.att_w1p
        yield "att.w2p", self.att_w2p
        yield "feedback", self.feedback
        yield "out_proj", self.out_proj

    def zero_grads(self):
        return {name: np.zeros_like(arr) for name, arr in self.param_items()}

    def set_param(self, name, value):
        """Overwrite one named array in place (shape must match)."""
        target = dict(self.param_items())[name]
        if target.shape != np.shape(value):
            raise ValueError(
                f"{name}: cannot assign shape {np.shape(value)} over {target.shape}")
        target[...] = value

    def copy(self):
        import copy as _copy

        new = _copy.copy(self)
        new.embedding = self.embedding.copy()
        new.out_embedding = self.out_embedding.copy()
        new.encoder_layers = [
            LstmLayerParams(l.wx.copy(), l.wh.copy(), l.h0.copy(), l.m0.copy())
            for l in self.encoder_layers]
        new.decoder_layers = [
            LstmLayerParams(l.wx.copy(), l.wh.copy(), l.h0.copy(), l.m0.copy())
            for l in self.decoder_layers]
        new.att_v = self.att_v.copy()
        new.att_w1p = self.att_w1p.copy()
        new.att_w2p = self.att_w2p.copy()
        new.feedback = self.feedback.copy()
        new.out_proj = self.out_proj.copy()
        return new


def init_params(hyper, seed):
    """Fresh parameters, every array uniform in [-init_scale, init_scale]."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    h, e, s = hyper.hidden, hyper.embed, hyper.init_scale

    def stack():
        layers = [_init_layer(rng, e, h, s)]
        layers.extend(_init_layer(rng, h, h, s) for _ in range(hyper.layers - 1))
        return layers

    return ModelParams(
        hyper=hyper,
        embedding=uniform_init(rng, (hyper.input_vocab, e), s),
        out_embedding=uniform_init(rng, (hyper.output_vocab, e), s),
        encoder_layers=stack(),
        decoder_layers=stack(),
        att_v=uniform_init(rng, (h,), s),
        att_w1p=uniform_init(rng, (h, h), s),
        att_w2p=uniform_init(rng, (h, h), s),
        feedback=uniform_init(rng, (h, 2 * h), s),
        out_proj=uniform_init(rng, (hyper.output_vocab, 2 * h), s),
    )


# ---------------------------------------------------------------------------
# Forward operations
# ---------------------------------------------------------------------------


def lstm_step(x, prev, layer):
    """One LSTM cell step on one layer; returns the next LstmState."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (layer.input_size,):
        raise ValueError(
            f"input has shape {x.shape}, layer expects ({layer.input_size},)")
    if prev.h.shape != (layer.hidden,) or prev.m.shape != (layer.hidden,):
        raise ValueError("previous state does not match the layer's hidden size")
    h, m, _ = kernels.lstm_cell_forward(layer.wx, layer.wh, x, prev.h, prev.m)
    return LstmState(h, m)


def _dropout_mask(rng, size, rate):
    """Inverted-dropout mask: entries 0 or 1/(1-rate)."""
    keep = rng.random(size) >= rate
    return keep.astype(np.float64) / (1.0 - rate)


def _need_rng(train_mode, rate, rng):
    if train_mode and rate > 0.0 and rng is None:
        raise ValueError("train_mode with dropout needs an rng for the masks")


def _run_stack(layers, x, states, drop_masks):
    """One timestep through a layer stack.

    drop_masks[l] scales the input of layer l (None for no dropout; index 0
    unused).  Returns (top h, new states, per-layer caches, inputs seen).
    """
    new_states = []
    caches = []
    for l, layer in enumerate(layers):
        if l > 0 and drop_masks is not None and drop_masks[l] is not None:
            x = x * drop_masks[l]
        h, m, cache = kernels.lstm_cell_forward(
            layer.wx, layer.wh, x, states[l].h, states[l].m)
        new_states.append(LstmState(h, m))
        caches.append(cache)
        x = h
    return x, new_states, caches


def encode(input_ids, params, train_mode=False, rng=None):
    """Run the encoder stack over (already reversed) input ids.

    Returns (enc, finals): the top layer h-sequence as a (T_A, hidden)
    array, and the final LstmState of every layer, which seed the decoder.
    """
    enc, finals, _, _ = _encode_trace(input_ids, params, train_mode, rng)
    return enc, finals


def _encode_trace(input_ids, params, train_mode, rng):
    """Encoder forward keeping per-step caches for the backward pass."""
    if len(input_ids) == 0:
        raise ValueError("cannot encode an empty id sequence")
    hyper = params.hyper
    if any(i < 0 or i >= hyper.input_vocab for i in input_ids):
        raise ValueError("input id outside the input vocabulary")
    _need_rng(train_mode, hyper.dropout, rng)
    n_layers = hyper.layers
    states = [LstmState(l.h0, l.m0) for l in params.encoder_layers]
    top_seq = []
    all_caches = []
    all_masks = []
    for t, idx in enumerate(input_ids):
        x = params.embedding[idx]
        if train_mode and hyper.dropout > 0.0:
            masks = [None] + [_dropout_mask(rng, hyper.hidden, hyper.dropout)
                              for _ in range(n_layers - 1)]
        else:
            masks = None
        top, states, caches = _run_stack(params.encoder_layers, x, states, masks)
        if not np.all(np.isfinite(top)):
            raise FloatingPointError(f"non-finite encoder state at input step {t}")
        top_seq.append(top)
        all_caches.append(caches)
        all_masks.append(masks)
    enc = np.array(top_seq)
    return enc, states, all_caches, all_masks


def encoder_projection(enc, params):
    """Precompute W1p h_i for every encoder position (reused across steps)."""
    return enc @ params.att_w1p.T


def attend(enc, d_t, params, enc_proj=None):
    """Attention weights over encoder positions and the context vector.

    Returns (a, d_prime) with a = softmax over T_A positions summing to 1
    and d_prime = sum_i a_i enc_i.
    """
    enc = np.asarray(enc)
    if enc.ndim != 2 or enc.shape[1] != params.hyper.hidden:
        raise ValueError(
            f"encoder sequence has shape {enc.shape}, expected (T, hidden)")
    if d_t.shape != (params.hyper.hidden,):
        raise ValueError("decoder state must be hidden-sized")
    if enc_proj is None:
        enc_proj = encoder_projection(enc, params)
    q = np.tanh(enc_proj + params.att_w2p @ d_t)
    u = q @ params.att_v
    a = softmax(u)
    return a, a @ enc


def init_decoder_state(finals):
    """Decoder start state: the encoder's final (h, m) per layer.

    The top entry's h doubles as the first feedback input; later steps
    replace it with the projected [d ; d'] vector.
    """
    return [LstmState(s.h, s.m) for s in finals]


def decode_step(prev_symbol_id, state, enc, params, train_mode=False,
                rng=None, enc_proj=None):
    """One decoder step from the previous symbol.

    Returns (dist, next_state, a): the symbol distribution, the carried
    state (top layer h slot holds the feedback vector), and the attention
    weights of this step.
    """
    hyper = params.hyper
    if not 0 <= prev_symbol_id < hyper.output_vocab:
        raise ValueError(f"symbol id {prev_symbol_id} outside the output vocabulary")
    _need_rng(train_mode, hyper.dropout, rng)
    if train_mode and hyper.dropout > 0.0:
        masks = [None] + [_dropout_mask(rng, hyper.hidden, hyper.dropout)
                          for _ in range(hyper.layers - 1)]
    else:
        masks = None
    x = params.out_embedding[prev_symbol_id]
    d_t, new_states, _ = _run_stack(params.decoder_layers, x, state, masks)
    a, d_prime = attend(enc, d_t, params, enc_proj)
    cat = np.concatenate([d_t, d_prime])
    dist = softmax(params.out_proj @ cat)
    fb = params.feedback @ cat
    new_states[-1] = LstmState(fb, new_states[-1].m)
    return dist, new_states, a


# ---------------------------------------------------------------------------
# Loss and gradients
# ---------------------------------------------------------------------------


def sequence_log_prob(input_ids, target_ids, params, train_mode=False, rng=None):
    """Teacher-forced log P(target | input) and, in train_mode, gradients.

    ``target_ids`` must end with END (id 0) and contain no earlier END.
    Returns (log_prob, grads) where grads is a dict over param_items names
    holding d(log_prob)/d(param), or None when train_mode is off.  Dropout
    masks (train_mode with dropout > 0) are drawn from ``rng``.
    """
    target_ids = list(target_ids)
    if not target_ids or target_ids[-1] != END_ID:
        raise ValueError("target sequence must terminate with END")
    if END_ID in target_ids[:-1]:
        raise ValueError("END appears before the end of the target sequence")
    hyper = params.hyper
    if any(i < 0 or i >= hyper.output_vocab for i in target_ids):
        raise ValueError("target id outside the output vocabulary")
    _need_rng(train_mode, hyper.dropout, rng)

    n_layers = hyper.layers
    hidden = hyper.hidden
    top = n_layers - 1

    enc, finals, enc_caches, enc_masks = _encode_trace(
        input_ids, params, train_mode, rng)
    enc_proj = encoder_projection(enc, params)

    # decoder forward, caching everything the backward pass needs
    y_in = [END_ID] + target_ids[:-1]
    n_steps = len(target_ids)
    states = init_decoder_state(finals)
    dec_caches = []
    dec_masks = []
    atts = []
    qs = []
    cats = []
    probs = []
    log_prob = 0.0
    for s in range(n_steps):
        if train_mode and hyper.dropout > 0.0:
            masks = [None] + [_dropout_mask(rng, hidden, hyper.dropout)
                              for _ in range(n_layers - 1)]
        else:
            masks = None
        x = params.out_embedding[y_in[s]]
        d_t, states, caches = _run_stack(params.decoder_layers, x, states, masks)
        q = np.tanh(enc_proj + params.att_w2p @ d_t)
        u = q @ params.att_v
        a = softmax(u)
        d_prime = a @ enc
        cat = np.concatenate([d_t, d_prime])
        logits = params.out_proj @ cat
        shifted = logits - np.max(logits)
        log_z = np.log(np.sum(np.exp(shifted)))
        step_lp = shifted[target_ids[s]] - log_z
        if not np.isfinite(step_lp):
            raise FloatingPointError(f"non-finite log probability at output step {s}")
        log_prob += step_lp

        fb = params.feedback @ cat
        states = states[:-1] + [LstmState(fb, states[-1].m)]
        dec_caches.append(caches)
        dec_masks.append(masks)
        atts.append(a)
        qs.append(q)
        cats.append(cat)
        probs.append(np.exp(shifted - log_z))

    if not train_mode:
        return float(log_prob), None

    grads = params.zero_grads()
    d_enc = np.zeros_like(enc)
    d_enc_proj = np.zeros_like(enc_proj)

    # reverse over decoder steps
    dh_carry = [np.zeros(hidden) for _ in range(n_layers)]
    dm_carry = [np.zeros(hidden) for _ in range(n_layers)]
    dfb_pending = None  # gradient on the feedback vector produced at step s-1
    for s in range(n_steps - 1, -1, -1):
        dlogits = -probs[s]
        dlogits[target_ids[s]] += 1.0
        grads["out_proj"] += np.outer(dlogits, cats[s])
        dcat = params.out_proj.T @ dlogits
        if dfb_pending is not None:
            grads["feedback"] += np.outer(dfb_pending, cats[s])
            dcat += params.feedback.T @ dfb_pending
        dd = dcat[:hidden].copy()
        ddp = dcat[hidden:]

        # attention backward: d_prime = a @ enc, a = softmax(q @ v)
        a, q = atts[s], qs[s]
        da = enc @ ddp
        d_enc += np.outer(a, ddp)
        du = a * (da - float(a @ da))
        grads["att.v"] += q.T @ du
        dq = np.outer(du, params.att_v)
        dpre = dq * (1.0 - q * q)
        d_enc_proj += dpre
        dsum = dpre.sum(axis=0)
        d_t = cats[s][:hidden]
        grads["att.w2p"] += np.outer(dsum, d_t)
        dd += params.att_w2p.T @ dsum

        # decoder stack backward, top layer first
        masks = dec_masks[s]
        dx_above = None
        for l in range(n_layers - 1, -1, -1):
            if l == top:
                dh = dd
            else:
                dh = dh_carry[l] + dx_above
            layer = params.decoder_layers[l]
            dx, dh_prev, dm_prev = kernels.lstm_cell_backward(
                layer.wx, layer.wh, dec_caches[s][l], dh, dm_carry[l],
                grads[f"dec{l}.wx"], grads[f"dec{l}.wh"])
            if l > 0:
                dx_above = dx * masks[l] if masks is not None and masks[l] is not None else dx
            else:
                grads["out_embedding"][y_in[s]] += dx
            if l == top:
                dfb_pending = dh_prev
            else:
                dh_carry[l] = dh_prev
            dm_carry[l] = dm_prev

    # gradients on the decoder's initial state attach to the encoder finals;
    # the top layer's first feedback input was the encoder's final top h
    denc_final_h = list(dh_carry)
    denc_final_h[top] = dfb_pending
    denc_final_m = dm_carry

    # attention's encoder-side projection
    grads["att.w1p"] += d_enc_proj.T @ enc
    d_enc += d_enc_proj @ params.att_w1p

    # reverse over encoder steps
    n_inputs = len(input_ids)
    dh_carry = denc_final_h
    dm_carry = denc_final_m
    for t in range(n_inputs - 1, -1, -1):
        masks = enc_masks[t]
        dx_above = None
        for l in range(n_layers - 1, -1, -1):
            dh = dh_carry[l].copy()
            if l == top:
                dh += d_enc[t]
            if l < top:
                dh += dx_above
            layer = params.encoder_layers[l]
            dx, dh_prev, dm_prev = kernels.lstm_cell_backward(
                layer.wx, layer.wh, enc_caches[t][l], dh, dm_carry[l],
                grads[f"enc{l}.wx"], grads[f"enc{l}.wh"])
            if l > 0:
                dx_above = dx * masks[l] if masks is not None and masks[l] is not None else dx
            else:
                grads["embedding"][input_ids[t]] += dx
            dh_carry[l] = dh_prev
            dm_carry[l] = dm_prev

    for l in range(n_layers):
        grads[f"enc{l}.h0"] += dh_carry[l]
        grads[f"enc{l}.m0"] += dm_carry[l]
        # decoder h0/m0 never enter the computation; grads stay zero

    return float(log_prob), grads
