"""Cross-attentional audio-visual fusion with hand-derived gradients.

One sequence is a pair of feature matrices Xa, Xv in R^{K x L}: K feature
dimensions, L temporal subsequences, one column per subsequence. The fused
forward graph is

    Z       = Xa^T W Xv                       (L x L correlation, W learnable)
    A_a     = column softmax of Z / T
    A_v     = row softmax of Z^T / T          (exactly A_a transposed)
    Xhat_a  = Xa A_a,  Xhat_v = Xv A_v        (attention maps)
    Xatt_a  = tanh(Xa + Xhat_a)               (attended features, same for v)
    joint   = [Xatt_v ; Xatt_a]               (2K x L, visual block on top)
    pred_l  = fc2( relu( fc1( joint[:, l] ) ) )   one scalar per subsequence

plus three ablation variants: raw feature concatenation (no attention), per
modality self-attention (Za = Xa^T Wa Xa, Zv = Xv^T Wv Xv), and a two-stage
pipeline that applies the attention block twice before the head.

Training minimizes 1 - CCC of the predictions against the targets. All
backward passes are derived by hand for this fixed graph (no autodiff) and
produce exact derivatives; ``avfusion.gradcheck`` verifies them against
central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import linalg
from .errors import DomainError, ShapeError
from .metrics import ccc_loss, ccc_loss_grad

__all__ = [
    "FeatureSequence",
    "FusionParams",
    "SelfAttentionParams",
    "HeadParams",
    "TwoStageParams",
    "AttentionStage",
    "FusionOutput",
    "GradientBundle",
    "cross_correlation",
    "attention_weights",
    "attended_features",
    "fusion_forward",
    "fusion_backward",
    "concat_baseline_forward",
    "self_attention_forward",
    "two_stage_forward",
    "ModelVariant",
    "VARIANTS",
    "init_fusion_params",
    "init_self_attention_params",
    "init_head_params",
    "init_two_stage_params",
    "dropout_mask",
]


# ---------------------------------------------------------------------------
# types


@dataclass
class FeatureSequence:
    """One modality's features for one sequence: a K x L matrix plus metadata."""

    modality: str  # "audio" or "visual"
    features: np.ndarray
    sequence_id: str = ""

    def __post_init__(self):
        self.features = linalg.as_matrix(self.features, "features")
        if self.features.shape[0] < 1 or self.features.shape[1] < 1:
            raise ShapeError(f"features must be at least 1x1, got {self.features.shape}")
        if self.modality not in ("audio", "visual"):
            raise DomainError(f"modality must be 'audio' or 'visual', got {self.modality!r}")

    @property
    def k(self) -> int:
        return self.features.shape[0]

    @property
    def l(self) -> int:
        return self.features.shape[1]


def _features_of(x, name: str) -> np.ndarray:
    """Accept a FeatureSequence or a bare (K, L) array."""
    if isinstance(x, FeatureSequence):
        return x.features
    return linalg.as_matrix(x, name)


def _check_pair(xa: np.ndarray, xv: np.ndarray) -> tuple[int, int]:
    if xa.shape != xv.shape:
        raise ShapeError(f"audio features {xa.shape} and visual features {xv.shape} must match")
    return xa.shape


@dataclass
class HeadParams:
    """Two-layer prediction head: scalar = fc2_w @ relu(fc1_w @ col + fc1_b) + fc2_b."""

    fc1_w: np.ndarray  # (H, 2K)
    fc1_b: np.ndarray  # (H,)
    fc2_w: np.ndarray  # (1, H)
    fc2_b: np.ndarray  # (1,)

    def __post_init__(self):
        self.fc1_w = linalg.as_matrix(self.fc1_w, "fc1_w")
        self.fc1_b = np.asarray(self.fc1_b, dtype=np.float64).ravel()
        self.fc2_w = linalg.as_matrix(self.fc2_w, "fc2_w")
        self.fc2_b = np.asarray(self.fc2_b, dtype=np.float64).ravel()
        h = self.fc1_w.shape[0]
        if self.fc1_b.shape != (h,):
            raise ShapeError(f"fc1_b must have length {h}, got {self.fc1_b.shape}")
        if self.fc2_w.shape != (1, h):
            raise ShapeError(f"fc2_w must be 1x{h}, got {self.fc2_w.shape}")
        if self.fc2_b.shape != (1,):
            raise ShapeError(f"fc2_b must be a single scalar, got shape {self.fc2_b.shape}")

    @property
    def hidden(self) -> int:
        return self.fc1_w.shape[0]

    def tensors(self) -> dict[str, np.ndarray]:
        return {"fc1_w": self.fc1_w, "fc1_b": self.fc1_b, "fc2_w": self.fc2_w, "fc2_b": self.fc2_b}


def _check_temperature(t: float) -> float:
    if t <= 0.0:
        raise DomainError(f"softmax temperature must be positive, got {t}")
    return float(t)


@dataclass
class FusionParams:
    """Learnable state of the cross-attention model."""

    w: np.ndarray  # (K, K)
    fc1_w: np.ndarray
    fc1_b: np.ndarray
    fc2_w: np.ndarray
    fc2_b: np.ndarray
    temperature: float = 1.0

    def __post_init__(self):
        self.w = linalg.as_matrix(self.w, "w")
        if self.w.shape[0] != self.w.shape[1]:
            raise ShapeError(f"w must be square, got {self.w.shape}")
        self.temperature = _check_temperature(self.temperature)
        head = HeadParams(self.fc1_w, self.fc1_b, self.fc2_w, self.fc2_b)
        self.fc1_w, self.fc1_b = head.fc1_w, head.fc1_b
        self.fc2_w, self.fc2_b = head.fc2_w, head.fc2_b
        if self.fc1_w.shape[1] != 2 * self.w.shape[0]:
            raise ShapeError(
                f"fc1_w must have 2K={2 * self.w.shape[0]} columns for K={self.w.shape[0]}, "
                f"got {self.fc1_w.shape}"
            )

    @property
    def k(self) -> int:
        return self.w.shape[0]

    @property
    def head(self) -> HeadParams:
        return HeadParams(self.fc1_w, self.fc1_b, self.fc2_w, self.fc2_b)

    def tensors(self) -> dict[str, np.ndarray]:
        return {
            "w": self.w,
            "fc1_w": self.fc1_w,
            "fc1_b": self.fc1_b,
            "fc2_w": self.fc2_w,
            "fc2_b": self.fc2_b,
        }


@dataclass
class SelfAttentionParams:
    """Learnable state of the self-attention ablation (one W per modality)."""

    wa: np.ndarray  # (K, K)
    wv: np.ndarray  # (K, K)
    fc1_w: np.ndarray
    fc1_b: np.ndarray
    fc2_w: np.ndarray
    fc2_b: np.ndarray
    temperature: float = 1.0

    def __post_init__(self):
        self.wa = linalg.as_matrix(self.wa, "wa")
        self.wv = linalg.as_matrix(self.wv, "wv")
        if self.wa.shape != self.wv.shape or self.wa.shape[0] != self.wa.shape[1]:
            raise ShapeError(f"wa and wv must be equal square matrices, got {self.wa.shape} and {self.wv.shape}")
        self.temperature = _check_temperature(self.temperature)
        head = HeadParams(self.fc1_w, self.fc1_b, self.fc2_w, self.fc2_b)
        self.fc1_w, self.fc1_b = head.fc1_w, head.fc1_b
        self.fc2_w, self.fc2_b = head.fc2_w, head.fc2_b
        if self.fc1_w.shape[1] != 2 * self.wa.shape[0]:
            raise ShapeError(f"fc1_w must have 2K columns, got {self.fc1_w.shape} for K={self.wa.shape[0]}")

    @property
    def k(self) -> int:
        return self.wa.shape[0]

    @property
    def head(self) -> HeadParams:
        return HeadParams(self.fc1_w, self.fc1_b, self.fc2_w, self.fc2_b)

    def tensors(self) -> dict[str, np.ndarray]:
        return {
            "wa": self.wa,
            "wv": self.wv,
            "fc1_w": self.fc1_w,
            "fc1_b": self.fc1_b,
            "fc2_w": self.fc2_w,
            "fc2_b": self.fc2_b,
        }


@dataclass
class TwoStageParams:
    """Learnable state of the two-stage variant: two correlation weights, one head."""

    w1: np.ndarray
    w2: np.ndarray
    fc1_w: np.ndarray
    fc1_b: np.ndarray
    fc2_w: np.ndarray
    fc2_b: np.ndarray
    temperature: float = 1.0

    def __post_init__(self):
        self.w1 = linalg.as_matrix(self.w1, "w1")
        self.w2 = linalg.as_matrix(self.w2, "w2")
        if self.w1.shape != self.w2.shape or self.w1.shape[0] != self.w1.shape[1]:
            raise ShapeError(f"w1 and w2 must be equal square matrices, got {self.w1.shape} and {self.w2.shape}")
        self.temperature = _check_temperature(self.temperature)
        head = HeadParams(self.fc1_w, self.fc1_b, self.fc2_w, self.fc2_b)
        self.fc1_w, self.fc1_b = head.fc1_w, head.fc1_b
        self.fc2_w, self.fc2_b = head.fc2_w, head.fc2_b

    @property
    def k(self) -> int:
        return self.w1.shape[0]

    @property
    def head(self) -> HeadParams:
        return HeadParams(self.fc1_w, self.fc1_b, self.fc2_w, self.fc2_b)

    def stage_params(self) -> tuple["FusionParams", "FusionParams"]:
        """The per-stage FusionParams views (stage 1's head is never used)."""
        s1 = FusionParams(self.w1, self.fc1_w, self.fc1_b, self.fc2_w, self.fc2_b, self.temperature)
        s2 = FusionParams(self.w2, self.fc1_w, self.fc1_b, self.fc2_w, self.fc2_b, self.temperature)
        return s1, s2

    def tensors(self) -> dict[str, np.ndarray]:
        return {
            "w1": self.w1,
            "w2": self.w2,
            "fc1_w": self.fc1_w,
            "fc1_b": self.fc1_b,
            "fc2_w": self.fc2_w,
            "fc2_b": self.fc2_b,
        }


@dataclass
class AttentionStage:
    """Intermediates of one attention block (correlation through tanh residual)."""

    z: np.ndarray
    att_a: np.ndarray
    att_v: np.ndarray
    attended_a: np.ndarray
    attended_v: np.ndarray


@dataclass
class FusionOutput:
    """Everything the forward pass produces, kept for the backward pass."""

    z: Optional[np.ndarray]
    att_a: Optional[np.ndarray]
    att_v: Optional[np.ndarray]
    attended_a: Optional[np.ndarray]
    attended_v: Optional[np.ndarray]
    joint: np.ndarray
    predictions: np.ndarray
    z_visual: Optional[np.ndarray] = None  # self-attention only: the visual correlation
    stage1: Optional[AttentionStage] = None  # two-stage only: first block


@dataclass
class GradientBundle:
    """Gradients of the loss, keyed by the owning parameter tensor's name."""

    param_grads: dict[str, np.ndarray] = field(default_factory=dict)
    d_xa: Optional[np.ndarray] = None
    d_xv: Optional[np.ndarray] = None

    @property
    def d_w(self) -> np.ndarray:
        return self.param_grads["w"]

    @property
    def d_fc1_w(self) -> np.ndarray:
        return self.param_grads["fc1_w"]

    @property
    def d_fc1_b(self) -> np.ndarray:
        return self.param_grads["fc1_b"]

    @property
    def d_fc2_w(self) -> np.ndarray:
        return self.param_grads["fc2_w"]

    @property
    def d_fc2_b(self) -> np.ndarray:
        return self.param_grads["fc2_b"]


# ---------------------------------------------------------------------------
# spec'd building blocks


def cross_correlation(xa, xv, w) -> np.ndarray:
    """Correlation matrix Z = Xa^T W Xv, shape (L, L)."""
    xa_m = _features_of(xa, "xa")
    xv_m = _features_of(xv, "xv")
    k, _ = _check_pair(xa_m, xv_m)
    w = linalg.as_matrix(w, "w")
    if w.shape != (k, k):
        raise ShapeError(f"w must be {k}x{k} to match K={k} features, got {w.shape}")
    return xa_m.T @ w @ xv_m


def attention_weights(z, temperature: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Attention weights (att_a, att_v) from a square correlation matrix.

    att_a is the column-wise softmax of z / temperature (columns sum to 1);
    att_v is the row-wise softmax of z^T / temperature (rows sum to 1). The
    two normalizations read the same entries, so att_v equals att_a
    transposed, entry for entry.
    """
    z = linalg.as_matrix(z, "z")
    if z.shape[0] != z.shape[1]:
        raise ShapeError(f"correlation matrix must be square, got {z.shape}")
    att_a = linalg.softmax_columns(z, temperature)
    att_v = att_a.T.copy()
    return att_a, att_v


def attended_features(xa, xv, att_a, att_v) -> tuple[np.ndarray, np.ndarray]:
    """Attention maps plus tanh residual: tanh(X + X @ A) for each modality."""
    xa_m = _features_of(xa, "xa")
    xv_m = _features_of(xv, "xv")
    _, l = _check_pair(xa_m, xv_m)
    att_a = linalg.as_matrix(att_a, "att_a")
    att_v = linalg.as_matrix(att_v, "att_v")
    if att_a.shape != (l, l) or att_v.shape != (l, l):
        raise ShapeError(f"attention weights must be {l}x{l}, got {att_a.shape} and {att_v.shape}")
    xatt_a = np.tanh(xa_m + xa_m @ att_a)
    xatt_v = np.tanh(xv_m + xv_m @ att_v)
    return xatt_a, xatt_v


def _attention_stage(xa_m: np.ndarray, xv_m: np.ndarray, w: np.ndarray, t: float) -> AttentionStage:
    z = xa_m.T @ (w @ xv_m)
    att_a = linalg.softmax_columns(z, t)
    att_v = att_a.T.copy()
    xatt_a = np.tanh(xa_m + xa_m @ att_a)
    xatt_v = np.tanh(xv_m + xv_m @ att_v)
    return AttentionStage(z, att_a, att_v, xatt_a, xatt_v)


def _softmax_columns_vjp(att: np.ndarray, d_att: np.ndarray, t: float) -> np.ndarray:
    # Per column j: dz[:, j] = att[:, j] * (d_att[:, j] - <d_att[:, j], att[:, j]>) / t
    s = (att * d_att).sum(axis=0, keepdims=True)
    return att * (d_att - s) / t


def _attention_stage_backward(
    xa_m: np.ndarray,
    xv_m: np.ndarray,
    w: np.ndarray,
    t: float,
    st: AttentionStage,
    d_xatt_a: np.ndarray,
    d_xatt_v: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (d_w, d_xa, d_xv) of one cross-attention block.

    Walks the block in reverse: tanh, the X @ A products, the shared softmax
    (att_v is att_a transposed, so its cotangent folds in transposed), and
    the bilinear form Z = Xa^T W Xv.
    """
    dsa = d_xatt_a * (1.0 - st.attended_a**2)
    dsv = d_xatt_v * (1.0 - st.attended_v**2)
    d_xa = dsa + dsa @ st.att_a.T
    d_xv = dsv + dsv @ st.att_v.T
    d_att = xa_m.T @ dsa + (xv_m.T @ dsv).T
    dz = _softmax_columns_vjp(st.att_a, d_att, t)
    d_w = xa_m @ dz @ xv_m.T
    d_xa += w @ xv_m @ dz.T
    d_xv += w.T @ xa_m @ dz
    return d_w, d_xa, d_xv


def _head_forward(
    joint: np.ndarray, head: HeadParams, mask: Optional[np.ndarray]
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    if head.fc1_w.shape[1] != joint.shape[0]:
        raise ShapeError(f"head expects {head.fc1_w.shape[1]} joint features, got {joint.shape[0]}")
    jd = joint if mask is None else joint * mask
    h = head.fc1_w @ jd + head.fc1_b[:, None]
    r = np.maximum(h, 0.0)
    preds = (head.fc2_w @ r).ravel() + head.fc2_b[0]
    return preds, jd, h, r


def _head_backward(
    dpred: np.ndarray,
    joint: np.ndarray,
    head: HeadParams,
    mask: Optional[np.ndarray],
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    # Recomputing the cheap intermediates keeps the forward cache small.
    _, jd, h, r = _head_forward(joint, head, mask)
    dout = dpred[None, :]
    grads = {"fc2_w": dout @ r.T, "fc2_b": np.array([dout.sum()])}
    dr = head.fc2_w.T @ dout
    dh = np.where(h > 0.0, dr, 0.0)
    grads["fc1_b"] = dh.sum(axis=1)
    grads["fc1_w"] = dh @ jd.T
    d_joint = head.fc1_w.T @ dh
    if mask is not None:
        d_joint = d_joint * mask
    return grads, d_joint


def _check_mask(mask: Optional[np.ndarray], k: int, l: int) -> Optional[np.ndarray]:
    if mask is None:
        return None
    mask = linalg.as_matrix(mask, "dropout mask")
    if mask.shape != (2 * k, l):
        raise ShapeError(f"dropout mask must be {2 * k}x{l}, got {mask.shape}")
    return mask


def dropout_mask(k: int, l: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-dropout mask for a 2K x L joint matrix: entries are 0 or 1/(1-p)."""
    if not 0.0 <= p < 1.0:
        raise DomainError(f"dropout probability must be in [0, 1), got {p}")
    keep = rng.random((2 * k, l)) >= p
    return keep.astype(np.float64) / (1.0 - p)


# ---------------------------------------------------------------------------
# model variants: forward


def fusion_forward(xa, xv, params: FusionParams, dropout_mask: Optional[np.ndarray] = None) -> FusionOutput:
    """Full cross-attention forward pass for one sequence."""
    xa_m = _features_of(xa, "xa")
    xv_m = _features_of(xv, "xv")
    k, l = _check_pair(xa_m, xv_m)
    if params.k != k:
        raise ShapeError(f"params built for K={params.k}, features have K={k}")
    mask = _check_mask(dropout_mask, k, l)
    st = _attention_stage(xa_m, xv_m, params.w, params.temperature)
    joint = np.vstack([st.attended_v, st.attended_a])
    preds, _, _, _ = _head_forward(joint, params.head, mask)
    return FusionOutput(st.z, st.att_a, st.att_v, st.attended_a, st.attended_v, joint, preds)


def _fusion_backward_from_dpred(
    xa, xv, params: FusionParams, out: FusionOutput, dpred: np.ndarray, mask: Optional[np.ndarray]
) -> GradientBundle:
    xa_m = _features_of(xa, "xa")
    xv_m = _features_of(xv, "xv")
    k = xa_m.shape[0]
    head_grads, d_joint = _head_backward(dpred, out.joint, params.head, mask)
    st = AttentionStage(out.z, out.att_a, out.att_v, out.attended_a, out.attended_v)
    d_w, d_xa, d_xv = _attention_stage_backward(
        xa_m, xv_m, params.w, params.temperature, st, d_joint[k:, :], d_joint[:k, :]
    )
    return GradientBundle({"w": d_w, **head_grads}, d_xa, d_xv)


def fusion_backward(
    xa, xv, params: FusionParams, target, dropout_mask: Optional[np.ndarray] = None
) -> tuple[float, GradientBundle]:
    """1 - CCC loss against ``target`` and its exact gradients for one sequence."""
    target = np.asarray(target, dtype=np.float64).ravel()
    out = fusion_forward(xa, xv, params, dropout_mask)
    if target.size != out.predictions.size:
        raise ShapeError(f"target length {target.size} does not match L={out.predictions.size}")
    loss = ccc_loss(out.predictions, target)
    dpred = ccc_loss_grad(out.predictions, target)
    mask = _check_mask(dropout_mask, _features_of(xa, "xa").shape[0], target.size)
    return loss, _fusion_backward_from_dpred(xa, xv, params, out, dpred, mask)


def _concat_forward_cached(xa, xv, head: HeadParams, dropout_mask: Optional[np.ndarray]) -> FusionOutput:
    xa_m = _features_of(xa, "xa")
    xv_m = _features_of(xv, "xv")
    k, l = _check_pair(xa_m, xv_m)
    mask = _check_mask(dropout_mask, k, l)
    joint = np.vstack([xv_m, xa_m])
    preds, _, _, _ = _head_forward(joint, head, mask)
    return FusionOutput(None, None, None, None, None, joint, preds)


def concat_baseline_forward(xa, xv, head: HeadParams, dropout_mask: Optional[np.ndarray] = None) -> np.ndarray:
    """Baseline predictions from the raw concatenation [Xv ; Xa] (no attention)."""
    return _concat_forward_cached(xa, xv, head, dropout_mask).predictions


def _concat_backward_from_dpred(
    xa, xv, head: HeadParams, out: FusionOutput, dpred: np.ndarray, mask: Optional[np.ndarray]
) -> GradientBundle:
    k = _features_of(xa, "xa").shape[0]
    head_grads, d_joint = _head_backward(dpred, out.joint, head, mask)
    return GradientBundle(head_grads, d_xa=d_joint[k:, :], d_xv=d_joint[:k, :])


def self_attention_forward(
    xa, xv, params: SelfAttentionParams, dropout_mask: Optional[np.ndarray] = None
) -> FusionOutput:
    """Self-attention ablation: each modality attends to its own correlations."""
    xa_m = _features_of(xa, "xa")
    xv_m = _features_of(xv, "xv")
    k, l = _check_pair(xa_m, xv_m)
    if params.k != k:
        raise ShapeError(f"params built for K={params.k}, features have K={k}")
    mask = _check_mask(dropout_mask, k, l)
    t = params.temperature
    z_a = xa_m.T @ (params.wa @ xa_m)
    z_v = xv_m.T @ (params.wv @ xv_m)
    att_a = linalg.softmax_columns(z_a, t)
    att_v = linalg.softmax_columns(z_v, t).T.copy()  # row softmax of z_v^T
    xatt_a = np.tanh(xa_m + xa_m @ att_a)
    xatt_v = np.tanh(xv_m + xv_m @ att_v)
    joint = np.vstack([xatt_v, xatt_a])
    preds, _, _, _ = _head_forward(joint, params.head, mask)
    return FusionOutput(z_a, att_a, att_v, xatt_a, xatt_v, joint, preds, z_visual=z_v)


def _self_attention_backward_from_dpred(
    xa, xv, params: SelfAttentionParams, out: FusionOutput, dpred: np.ndarray, mask: Optional[np.ndarray]
) -> GradientBundle:
    xa_m = _features_of(xa, "xa")
    xv_m = _features_of(xv, "xv")
    k = xa_m.shape[0]
    t = params.temperature
    head_grads, d_joint = _head_backward(dpred, out.joint, params.head, mask)
    d_xatt_v, d_xatt_a = d_joint[:k, :], d_joint[k:, :]

    dsa = d_xatt_a * (1.0 - out.attended_a**2)
    d_xa = dsa + dsa @ out.att_a.T
    dza = _softmax_columns_vjp(out.att_a, xa_m.T @ dsa, t)
    d_wa = xa_m @ dza @ xa_m.T
    # z_a = Xa^T Wa Xa touches Xa twice: one term per occurrence.
    d_xa += params.wa @ xa_m @ dza.T + params.wa.T @ xa_m @ dza

    dsv = d_xatt_v * (1.0 - out.attended_v**2)
    d_xv = dsv + dsv @ out.att_v.T
    # att_v is the transposed column softmax of z_v; fold its cotangent back.
    dzv = _softmax_columns_vjp(out.att_v.T, (xv_m.T @ dsv).T, t)
    d_wv = xv_m @ dzv @ xv_m.T
    d_xv += params.wv @ xv_m @ dzv.T + params.wv.T @ xv_m @ dzv

    return GradientBundle({"wa": d_wa, "wv": d_wv, **head_grads}, d_xa, d_xv)


def two_stage_forward(
    xa, xv, stage1: FusionParams, stage2: FusionParams, dropout_mask: Optional[np.ndarray] = None
) -> FusionOutput:
    """Two chained attention blocks; only the second block's output feeds the head.

    ``stage1``'s head tensors are ignored. Both stages keep the feature
    dimension K, so ``stage2`` must share ``stage1``'s K.
    """
    xa_m = _features_of(xa, "xa")
    xv_m = _features_of(xv, "xv")
    k, l = _check_pair(xa_m, xv_m)
    if stage1.k != k or stage2.k != k:
        raise ShapeError(f"stage params need K={k}, got K1={stage1.k}, K2={stage2.k}")
    mask = _check_mask(dropout_mask, k, l)
    st1 = _attention_stage(xa_m, xv_m, stage1.w, stage1.temperature)
    st2 = _attention_stage(st1.attended_a, st1.attended_v, stage2.w, stage2.temperature)
    joint = np.vstack([st2.attended_v, st2.attended_a])
    preds, _, _, _ = _head_forward(joint, stage2.head, mask)
    return FusionOutput(
        st2.z, st2.att_a, st2.att_v, st2.attended_a, st2.attended_v, joint, preds, stage1=st1
    )


def _two_stage_backward_from_dpred(
    xa, xv, params: TwoStageParams, out: FusionOutput, dpred: np.ndarray, mask: Optional[np.ndarray]
) -> GradientBundle:
    xa_m = _features_of(xa, "xa")
    xv_m = _features_of(xv, "xv")
    k = xa_m.shape[0]
    t = params.temperature
    head_grads, d_joint = _head_backward(dpred, out.joint, params.head, mask)
    st1 = out.stage1
    st2 = AttentionStage(out.z, out.att_a, out.att_v, out.attended_a, out.attended_v)
    d_w2, d_a1, d_v1 = _attention_stage_backward(
        st1.attended_a, st1.attended_v, params.w2, t, st2, d_joint[k:, :], d_joint[:k, :]
    )
    d_w1, d_xa, d_xv = _attention_stage_backward(xa_m, xv_m, params.w1, t, st1, d_a1, d_v1)
    return GradientBundle({"w1": d_w1, "w2": d_w2, **head_grads}, d_xa, d_xv)


# ---------------------------------------------------------------------------
# initialization


def init_head_params(k: int, hidden: int, rng: np.random.Generator) -> HeadParams:
    """Glorot-uniform head weights, zero biases."""
    return HeadParams(
        fc1_w=linalg.xavier_init(hidden, 2 * k, rng),
        fc1_b=np.zeros(hidden),
        fc2_w=linalg.xavier_init(1, hidden, rng),
        fc2_b=np.zeros(1),
    )


def init_fusion_params(k: int, hidden: int, rng: np.random.Generator, temperature: float = 1.0) -> FusionParams:
    w = linalg.xavier_init(k, k, rng)
    head = init_head_params(k, hidden, rng)
    return FusionParams(w, head.fc1_w, head.fc1_b, head.fc2_w, head.fc2_b, temperature)


def init_self_attention_params(
    k: int, hidden: int, rng: np.random.Generator, temperature: float = 1.0
) -> SelfAttentionParams:
    wa = linalg.xavier_init(k, k, rng)
    wv = linalg.xavier_init(k, k, rng)
    head = init_head_params(k, hidden, rng)
    return SelfAttentionParams(wa, wv, head.fc1_w, head.fc1_b, head.fc2_w, head.fc2_b, temperature)


def init_two_stage_params(
    k: int, hidden: int, rng: np.random.Generator, temperature: float = 1.0
) -> TwoStageParams:
    w1 = linalg.xavier_init(k, k, rng)
    w2 = linalg.xavier_init(k, k, rng)
    head = init_head_params(k, hidden, rng)
    return TwoStageParams(w1, w2, head.fc1_w, head.fc1_b, head.fc2_w, head.fc2_b, temperature)


# ---------------------------------------------------------------------------
# variant registry (shared by the trainer, gradient checker, and CLI)


@dataclass(frozen=True)
class ModelVariant:
    """Uniform handle on one model family: init, forward, backward."""

    name: str
    init_params: Callable[..., object]
    forward: Callable[..., FusionOutput]
    backward_from_dpred: Callable[..., GradientBundle]


def _two_stage_variant_forward(xa, xv, params: TwoStageParams, dropout_mask=None) -> FusionOutput:
    s1, s2 = params.stage_params()
    return two_stage_forward(xa, xv, s1, s2, dropout_mask)


VARIANTS: dict[str, ModelVariant] = {
    "cross-attn": ModelVariant(
        "cross-attn", init_fusion_params, fusion_forward, _fusion_backward_from_dpred
    ),
    "concat": ModelVariant(
        "concat",
        lambda k, hidden, rng, temperature=1.0: init_head_params(k, hidden, rng),
        lambda xa, xv, params, dropout_mask=None: _concat_forward_cached(xa, xv, params, dropout_mask),
        _concat_backward_from_dpred,
    ),
    "self-attn": ModelVariant(
        "self-attn", init_self_attention_params, self_attention_forward, _self_attention_backward_from_dpred
    ),
    "cross-attn-2stage": ModelVariant(
        "cross-attn-2stage", init_two_stage_params, _two_stage_variant_forward, _two_stage_backward_from_dpred
    ),
}


def get_variant(name: str) -> ModelVariant:
    """Look up a model variant by CLI name, with a helpful error."""
    try:
        return VARIANTS[name]
    except KeyError:
        raise DomainError(f"unknown model variant {name!r}; valid: {', '.join(sorted(VARIANTS))}") from None
