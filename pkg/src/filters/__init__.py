"""
Online filters with a shared streaming interface:

    flt.encode(X) -> U        (feature map or identity)
    flt.update(u, y) -> e     (a-priori error)
    flt.predict_encoded(U)
    flt.size                  (feature dimension or dictionary size)
"""

import numpy as np

from src.errors import InvalidArgumentError
from src.filters.kernel_trick import Dictionary, KernelTrickFilter
from src.filters.no_trick import FilterState, NoTrickFilter

NO_TRICK_RULES = ("lms", "rls", "exrls")
KERNEL_TRICK_RULES = ("klms", "qklms", "fbqklms", "krls")


def make_filter(rule, input_dim, feature_map=None, bandwidth=None, **hyper):
    if rule in NO_TRICK_RULES:
        return NoTrickFilter(rule, feature_map=feature_map, input_dim=input_dim, **hyper)
    if rule in KERNEL_TRICK_RULES:
        if bandwidth is None:
            raise InvalidArgumentError(f"{rule} needs the kernel bandwidth")
        return KernelTrickFilter(rule, input_dim, bandwidth, **hyper)
    raise InvalidArgumentError(f"unknown filter rule {rule!r}")


# ----------------------------
# Checkpoints
# ----------------------------
def save_checkpoint(flt, path):
    if flt.kernel_trick:
        dct = flt.dictionary
        np.savez(
            path,
            rule=flt.rule,
            centers=dct.centers,
            coefficients=dct.coefficients,
            significance=dct.significance,
            Q=dct.Q,
            hyper=np.array(
                [dct.input_dim, dct.bandwidth, dct.learning_rate, dct.q_factor, dct.budget,
                 dct.significance_decay, dct.regularizer]
            ),
        )
    else:
        st = flt.state
        np.savez(
            path,
            rule=flt.rule,
            weights=st.weights,
            inv_covariance=st.inv_covariance if st.inv_covariance is not None else np.empty((0, 0)),
            hyper=np.array(
                [st.learning_rate, st.forgetting, st.delta_init, st.alpha, st.process_noise]
            ),
        )


def load_checkpoint(path, feature_map=None):
    """Rebuild a filter from `save_checkpoint` output.

    No-trick checkpoints do not store the feature map; pass the same one back.
    """
    with np.load(path) as data:
        rule = str(data["rule"])
        hyper = data["hyper"]
        if rule in KERNEL_TRICK_RULES:
            input_dim, bandwidth, eta, q, budget, decay, reg = hyper
            flt = KernelTrickFilter(
                rule, int(input_dim), float(bandwidth), learning_rate=float(eta), q_factor=float(q),
                budget=float(budget), significance_decay=float(decay), regularizer=float(reg),
            )
            for x, c, s in zip(data["centers"], data["coefficients"], data["significance"]):
                flt.dictionary.append(x, c)
                flt.dictionary._significance[flt.dictionary.size - 1] = s
            flt.dictionary.Q = data["Q"].copy()
            return flt

        weights = data["weights"].copy()
        P = data["inv_covariance"]
        eta, lam, delta, alpha, q = (float(v) for v in hyper)
        flt = NoTrickFilter(
            rule, feature_map=feature_map, input_dim=weights.shape[0], learning_rate=eta,
            forgetting=lam, delta_init=delta, alpha=alpha, process_noise=q,
        )
        flt.state = FilterState(
            weights=weights,
            inv_covariance=P.copy() if P.size else None,
            learning_rate=eta,
            forgetting=lam,
            delta_init=delta,
            alpha=alpha,
            process_noise=q,
        )
        return flt


__all__ = [
    "Dictionary",
    "FilterState",
    "KernelTrickFilter",
    "NoTrickFilter",
    "make_filter",
    "save_checkpoint",
    "load_checkpoint",
]
