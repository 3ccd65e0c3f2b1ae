"""Command-line client for the toolkit.

Every subcommand builds the same request model the HTTP service accepts
and, by default, executes it in-process; pass --server to send it to a
running cpakit service instead. Fixed default seeds keep casual runs
reproducible: the same flags always produce byte-identical outputs.

Exit codes: 0 success (for attack: key recovered, or no ground truth to
check), 1 attack ran but did not recover the embedded key, 2 usage or
input errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import httpx
from pydantic import ValidationError

from .service import handlers
from .service.schemas import (
    DEFAULT_CHECKPOINTS,
    DEFAULT_SEED,
    AttackRequest,
    AttackResponse,
    EvolveRequest,
    EvolveResponse,
    InspectRequest,
    InspectResponse,
    SimulateRequest,
    SimulateResponse,
)

_ENDPOINTS = {
    SimulateRequest: ("/simulate", SimulateResponse, handlers.run_simulate),
    AttackRequest: ("/attack", AttackResponse, handlers.run_attack),
    EvolveRequest: ("/evolve", EvolveResponse, handlers.run_evolve),
    InspectRequest: ("/inspect", InspectResponse, handlers.run_inspect),
}


class CliError(Exception):
    pass


def _dispatch(request, server: str | None):
    path, response_model, handler = _ENDPOINTS[type(request)]
    if server is None:
        return handler(request)
    reply = httpx.post(
        server.rstrip("/") + path,
        json=request.model_dump(by_alias=True),
        timeout=600.0,
    )
    if reply.status_code != 200:
        try:
            detail = reply.json().get("detail", reply.text)
        except ValueError:
            detail = reply.text
        raise CliError(f"server returned {reply.status_code}: {detail}")
    return response_model.model_validate(reply.json())


def _add_server_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--server", metavar="URL", default=None,
                   help="send the request to a running cpakit service instead of running locally")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpakit", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate an acquisition campaign into a trace file")
    sim.add_argument("--key", default="random", help="32 hex chars or 'random' (default: random)")
    sim.add_argument("--plaintexts", type=int, required=True, metavar="N")
    sim.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sim.add_argument("--out", required=True, metavar="PATH")
    sim.add_argument("--embed-key", action="store_true",
                     help="store the key in the file header as ground truth")
    sim.add_argument("--samples", type=int, default=2500)
    sim.add_argument("--trigger-index", type=int, default=100)
    sim.add_argument("--byte-spacing", type=int, default=120)
    sim.add_argument("--xor-offset", type=int, default=0)
    sim.add_argument("--sbox-offset", type=int, default=40)
    sim.add_argument("--leak-coeff", type=float, default=0.01)
    sim.add_argument("--baseline", type=float, default=5.0)
    sim.add_argument("--noise-sigma", type=float, default=0.0)
    sim.add_argument("--drift-sigma", type=float, default=0.0)
    sim.add_argument("--jitter-max", type=int, default=0)
    sim.add_argument("--drop-prob", type=float, default=0.0)
    sim.add_argument("--repeats", type=int, default=10)
    sim.add_argument("--no-interrupts", action="store_true",
                     help="disable interrupts on the simulated target (forces zero jitter)")
    sim.add_argument("--acq-delay", action="store_true",
                     help="wait for the scope between plaintexts (forces zero drops)")
    sim.add_argument("--polarity", type=int, choices=(-1, 1), default=-1)
    _add_server_flag(sim)

    atk = sub.add_parser("attack", help="run CPA against a trace file")
    atk.add_argument("--in", dest="in_path", required=True, metavar="PATH")
    atk.add_argument("--model", default="sbox-hw",
                     choices=("xor-hw", "sbox-hw", "xor-hd", "sbox-hd"))
    atk.add_argument("--top", type=int, default=10, metavar="K")
    atk.add_argument("--json", action="store_true", help="print the full result as JSON")
    atk.add_argument("--realign", type=int, default=None, metavar="MAXSHIFT",
                     help="realign traces to trace 0 before attacking")
    atk.add_argument("--threads", type=int, default=1)
    _add_server_flag(atk)

    evo = sub.add_parser("evolve", help="export correlation evolution data")
    evo.add_argument("--in", dest="in_path", required=True, metavar="PATH")
    evo.add_argument("--model", default="sbox-hw",
                     choices=("xor-hw", "sbox-hw", "xor-hd", "sbox-hd"))
    evo.add_argument("--checkpoints", default=None, metavar="N1,N2,...",
                     help=f"default: {','.join(str(c) for c in DEFAULT_CHECKPOINTS)} clipped to the trace count")
    evo.add_argument("--out", required=True, metavar="PATH")
    evo.add_argument("--format", default="csv", choices=("csv", "json"))
    _add_server_flag(evo)

    ins = sub.add_parser("inspect", help="print trace file metadata")
    ins.add_argument("--in", dest="in_path", required=True, metavar="PATH")
    _add_server_flag(ins)

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)

    return parser


def _parse_checkpoints(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise CliError(f"--checkpoints must be a comma-separated list of integers, got {text!r}")


def _format_attack_text(resp: AttackResponse) -> str:
    lines = [f"model: {resp.model}", f"traces: {resp.num_traces}", f"best key: {resp.best_key}"]
    for row in resp.per_byte:
        cells = "  ".join(f"{c.candidate:02x}({c.peak_abs_rho:.4f})" for c in row.top)
        lines.append(f"byte {row.byte_index:2d}: {cells}")
    gt = resp.ground_truth
    if gt is None:
        lines.append("no ground-truth key embedded; no verdict")
    else:
        lines.append(f"true key: {gt.true_key}")
        lines.append("true byte ranks: " + " ".join(str(r) for r in gt.ranks))
        lines.append(f"bytes at rank 1: {gt.rank1_count}/16")
        lines.append(f"bytes with best guess in {{k, k^0xff}}: {gt.complement_rank1_count}/16")
        lines.append(f"verdict: {resp.verdict}")
    return "\n".join(lines)


def _cmd_simulate(args: argparse.Namespace) -> int:
    req = SimulateRequest(
        key=args.key,
        plaintexts=args.plaintexts,
        seed=args.seed,
        out=args.out,
        embed_key=args.embed_key,
        samples=args.samples,
        trigger_index=args.trigger_index,
        byte_spacing=args.byte_spacing,
        xor_offset=args.xor_offset,
        sbox_offset=args.sbox_offset,
        leak_coeff=args.leak_coeff,
        baseline=args.baseline,
        noise_sigma=args.noise_sigma,
        drift_sigma=args.drift_sigma,
        jitter_max=args.jitter_max,
        drop_prob=args.drop_prob,
        repeats=args.repeats,
        no_interrupts=args.no_interrupts,
        acq_delay=args.acq_delay,
        polarity=args.polarity,
    )
    resp = _dispatch(req, args.server)
    print(f"key: {resp.key}" + (" (embedded in header)" if resp.embedded_key else ""))
    print(f"wrote {resp.num_records} records x {resp.samples_per_trace} samples to {resp.out}")
    if resp.omitted_plaintexts:
        print(f"omitted {resp.omitted_plaintexts} plaintexts (all repeats dropped)")
    return 0


def _cmd_attack(args: argparse.Namespace) -> int:
    req = AttackRequest(
        in_path=args.in_path,
        model=args.model,
        top=args.top,
        realign=args.realign,
        threads=args.threads,
    )
    resp = _dispatch(req, args.server)
    if args.json:
        print(json.dumps(resp.model_dump(), indent=2))
    else:
        print(_format_attack_text(resp))
    return 1 if resp.verdict == "not-recovered" else 0


def _cmd_evolve(args: argparse.Namespace) -> int:
    req = EvolveRequest(
        in_path=args.in_path,
        model=args.model,
        checkpoints=_parse_checkpoints(args.checkpoints),
        out=args.out,
        format=args.format,
    )
    resp = _dispatch(req, args.server)
    if resp.clipped:
        print(
            "warning: clipped checkpoints beyond the trace count: "
            + ",".join(str(c) for c in resp.clipped),
            file=sys.stderr,
        )
    print(f"checkpoints: {','.join(str(c) for c in resp.checkpoints)}")
    print(f"wrote {resp.rows} rows to {resp.out} ({resp.format})")
    return 0


def _cmd_inspect(args: argparse.Namespace) -> int:
    resp = _dispatch(InspectRequest(in_path=args.in_path), args.server)
    print(f"records: {resp.num_records}")
    print(f"samples per trace: {resp.samples_per_trace}")
    print(f"sample rate: {resp.sample_rate_hz:g} Hz")
    print(f"ground-truth key embedded: {'yes' if resp.has_ground_truth_key else 'no'}")
    print(f"sample mean: {resp.sample_mean:.6g}")
    print(f"sample std: {resp.sample_std:.6g}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    commands = {
        "simulate": _cmd_simulate,
        "attack": _cmd_attack,
        "evolve": _cmd_evolve,
        "inspect": _cmd_inspect,
        "serve": _cmd_serve,
    }
    try:
        return commands[args.command](args)
    except (CliError, ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except httpx.HTTPError as exc:
        print(f"error: could not reach server: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
