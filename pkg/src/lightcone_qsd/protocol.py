"""Monte-Carlo rounds of a two-state identification protocol.

Each round picks the sent state with a fair bit and samples the receiver's
outcome from that state's row of the confusion matrix: correct (C_ii), wrong
(C_ij) or inconclusive (the rest). Random numbers come from Philox streams
keyed by (seed, chunk index), so results do not depend on how the rounds
are scheduled.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binomtest

POLICIES = ("discard", "error")
CHUNK = 65_536


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(chunk)])))


@dataclass
class ProtocolStats:
    rounds: int
    correct: int
    wrong: int
    inconclusive: int
    qber: float | None
    ci_low: float | None
    ci_high: float | None
    sigma: float | None
    analytic_qber: float | None
    policy: str
    seed: int
    degenerate: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "counts": {"correct": self.correct, "wrong": self.wrong, "inconclusive": self.inconclusive},
            "qber": self.qber,
            "ci": None if self.ci_low is None else [self.ci_low, self.ci_high],
            "sigma": self.sigma,
            "analytic_qber": self.analytic_qber,
            "policy": self.policy,
            "seed": self.seed,
            "degenerate": self.degenerate,
            "note": self.note,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def within_sigma(self, k: float = 3.0) -> bool:
        if self.qber is None or self.analytic_qber is None:
            return False
        return abs(self.qber - self.analytic_qber) <= k * (self.sigma or 0.0) + 1e-15


def analytic_qber(C, policy: str = "discard") -> float | None:
    C = np.asarray(C, dtype=float)
    p_correct = 0.5 * (C[0, 0] + C[1, 1])
    p_wrong = 0.5 * (C[0, 1] + C[1, 0])
    if policy == "error":
        return 1.0 - p_correct
    denom = p_correct + p_wrong
    return p_wrong / denom if denom > 0 else None


def simulate_protocol(C, rounds: int, seed: int, policy: str = "discard") -> ProtocolStats:
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}")
    rounds = int(rounds)
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    C = np.clip(np.asarray(C, dtype=float), 0.0, 1.0)
    if C.shape != (2, 2):
        raise ValueError("C must be 2x2")
    correct = wrong = 0
    for chunk, start in enumerate(range(0, rounds, CHUNK)):
        size = min(CHUNK, rounds - start)
        rng = _chunk_rng(seed, chunk)
        bit = rng.integers(0, 2, size=size)
        u = rng.random(size)
        p_ok = C[bit, bit]
        p_bad = C[bit, 1 - bit]
        ok = u < p_ok
        bad = ~ok & (u < p_ok + p_bad)
        correct += int(ok.sum())
        wrong += int(bad.sum())
    inconclusive = rounds - correct - wrong
    if policy == "error":
        k, n = wrong + inconclusive, rounds
    else:
        k, n = wrong, wrong + correct
    aq = analytic_qber(C, policy)
    if wrong + correct == 0:
        note = {
            "discard": "no conclusive rounds; qber undefined (all rounds discarded)",
            "error": "no conclusive rounds; every round would count as an error, qber undefined",
        }[policy]
        return ProtocolStats(
            rounds, correct, wrong, inconclusive, None, None, None, None, aq, policy, int(seed),
            degenerate=True,
            note=note,
        )
    q = k / n
    ci = binomtest(k, n).proportion_ci(confidence_level=0.95, method="wilson")
    ref = q if aq is None else aq
    sigma = math.sqrt(max(ref * (1.0 - ref), 0.0) / n)
    return ProtocolStats(
        rounds, correct, wrong, inconclusive, q, float(ci.low), float(ci.high), sigma, aq, policy, int(seed)
    )


def protocol_noise_sim(pair, observer, T: float, rounds: int, seed: int, policy: str = "discard") -> ProtocolStats:
    """Simulate ``rounds`` identifications with access time ``T``."""
    from .distinguish import AccessRegion, confusion_matrix, truncated_gram

    G = truncated_gram(pair, AccessRegion(observer, T))
    C, _ = confusion_matrix(G)
    return simulate_protocol(C, rounds, seed, policy)
