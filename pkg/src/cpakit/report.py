"""Human-readable attack summaries and recovered-key verification."""

from __future__ import annotations

from dataclasses import dataclass, field

from .aes import BLOCK_SIZE, aes128_encrypt_block, check_block
from .engine import AttackResult


@dataclass
class Summary:
    """Top candidates per byte plus success metrics when ground truth is known.

    complement_rank1_count counts bytes whose best guess is either the
    true byte or its bitwise complement; under an XOR-output model those
    two are indistinguishable by |rho|, so this is the honest success
    measure for that model.
    """

    best_key: bytes
    model: str
    top: list[list[tuple[int, float]]]
    true_key: bytes | None = field(default=None)
    true_ranks: list[int] | None = field(default=None)
    rank1_count: int | None = field(default=None)
    complement_rank1_count: int | None = field(default=None)

    @property
    def recovered(self) -> bool | None:
        if self.rank1_count is None:
            return None
        return self.rank1_count == BLOCK_SIZE


def summarize(result: AttackResult, ground_truth: bytes | None = None, top_k: int = 10) -> Summary:
    """Condense an AttackResult into per-byte top-k tables and metrics."""
    top = [r.top(top_k) for r in result.rankings]
    summary = Summary(best_key=result.best_key, model=result.model.name, top=top)
    if ground_truth is None:
        return summary
    ground_truth = check_block(ground_truth, "ground_truth")
    ranks = [result.rankings[b].rank_of(ground_truth[b]) for b in range(BLOCK_SIZE)]
    summary.true_key = ground_truth
    summary.true_ranks = ranks
    summary.rank1_count = sum(r == 1 for r in ranks)
    summary.complement_rank1_count = sum(
        result.best_key[b] in (ground_truth[b], ground_truth[b] ^ 0xFF)
        for b in range(BLOCK_SIZE)
    )
    return summary


def verify_key(candidate_key: bytes, known_pairs: list[tuple[bytes, bytes]]) -> bool:
    """True iff the candidate key reproduces every known ciphertext."""
    candidate_key = check_block(candidate_key, "candidate_key")
    if not known_pairs:
        raise ValueError("verify_key needs at least one (plaintext, ciphertext) pair")
    return all(
        aes128_encrypt_block(check_block(p, "plaintext"), candidate_key) == bytes(c)
        for p, c in known_pairs
    )


def summary_to_dict(summary: Summary) -> dict:
    """JSON-ready view of a Summary."""
    out = {
        "best_key": summary.best_key.hex(),
        "model": summary.model,
        "per_byte": [
            {
                "byte_index": b,
                "top": [{"candidate": c, "peak_abs_rho": rho} for c, rho in rows],
            }
            for b, rows in enumerate(summary.top)
        ],
    }
    if summary.true_key is not None:
        out["ground_truth"] = {
            "true_key": summary.true_key.hex(),
            "ranks": summary.true_ranks,
            "rank1_count": summary.rank1_count,
            "complement_rank1_count": summary.complement_rank1_count,
            "recovered": summary.recovered,
        }
    return out


def format_text(summary: Summary) -> str:
    """Plain-text rendering: one line per byte, metrics footer."""
    lines = [f"model: {summary.model}", f"best key: {summary.best_key.hex()}"]
    for b, rows in enumerate(summary.top):
        cells = "  ".join(f"{c:02x}({rho:.4f})" for c, rho in rows)
        lines.append(f"byte {b:2d}: {cells}")
    if summary.true_key is not None:
        lines.append(f"true key: {summary.true_key.hex()}")
        lines.append("true byte ranks: " + " ".join(str(r) for r in summary.true_ranks))
        lines.append(f"bytes at rank 1: {summary.rank1_count}/16")
        lines.append(f"bytes with best guess in {{k, k^0xff}}: {summary.complement_rank1_count}/16")
        lines.append("verdict: " + ("recovered" if summary.recovered else "not recovered"))
    else:
        lines.append("no ground-truth key embedded; no verdict")
    return "\n".join(lines)
