"""Command line entry point: ``mesokit {run,cost,simulate,compare,synth}``.

Exit status: 0 on success, 2 on a configuration error, 3 on a parse error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ausim import AuConfig, CapacityError, simulate
from .costmodel import mac_ratio, module_cost
from .formats import (
    NitCapacityError,
    ParseError,
    dumps_report,
    ingest_cloud,
    load_network,
    read_nit_binary,
    rows_to_csv,
    write_cloud,
    write_nit_binary,
)
from .geometry import CorruptNitError
from .pipeline import ConfigError, Mode, NetworkConfig, divergence_report, run_network_trace
from .synth import DISTRIBUTIONS, synth_cloud

log = logging.getLogger("mesokit")

EXIT_OK, EXIT_CONFIG, EXIT_PARSE = 0, 2, 3


def _au_config(args) -> AuConfig:
    return AuConfig(
        banks=args.au_banks,
        pft_buffer_bytes=int(round(args.au_buffer_kb * 1024)),
        nit_entries_per_buffer=args.au_nit_entries,
    )


def _au_header(cfg: AuConfig) -> dict:
    d = cfg.to_dict()
    d["pft_buffer_kb"] = cfg.pft_buffer_bytes / 1024
    return d


def _emit(args, name: str, report: dict, csv_rows: list[dict] | None = None) -> None:
    if args.format == "csv":
        if csv_rows is None:
            raise ConfigError(f"'{args.command}' has no flat table; use --format json")
        text, suffix = rows_to_csv(csv_rows), ".csv"
    else:
        text, suffix = dumps_report(report), ".json"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}{suffix}").write_text(text)
    else:
        sys.stdout.write(text)


def _load(args) -> tuple[np.ndarray, NetworkConfig]:
    cloud = ingest_cloud(args.input)
    net = load_network(args.net, seed=args.seed)
    return cloud, net


def _module_dims(net: NetworkConfig, n_in: int) -> list[dict]:
    dims = []
    for i, cfg in enumerate(net.modules):
        dims.append({"index": i, "n_in": n_in, "m_in": cfg.m_in, "n_out": cfg.n_out,
                     "m_out": cfg.m_out, "k": cfg.k, "widths": cfg.mlp.widths,
                     "activation": cfg.mlp.activation.value,
                     "search_space": cfg.search_space.value})
        n_in = cfg.n_out
    return dims


def cmd_run(args) -> int:
    cloud, net = _load(args)
    if not args.out:
        raise ConfigError("run needs --out for its artifacts")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = run_network_trace(cloud, net, args.mode)
    modules = _module_dims(net, cloud.shape[0])
    for dims, res in zip(modules, results):
        i = dims["index"]
        arts = {"centroids": f"centroids_{i}.txt"}
        (out / arts["centroids"]).write_text("".join(f"{c}\n" for c in res.nit.centroids))
        try:
            write_nit_binary(res.nit, out / f"nit_{i}.bin")
            arts["nit"] = f"nit_{i}.bin"
        except NitCapacityError as exc:
            log.warning("module %d: NIT not written in hardware format: %s", i, exc)
        np.save(out / f"nit_{i}.npy", res.nit.indices)
        arts["nit_npy"] = f"nit_{i}.npy"
        if res.pft is not None:
            arts["pft"] = f"pft_{i}.pcf"
            write_cloud(res.pft, out / arts["pft"])
        dims["artifacts"] = arts
    write_cloud(results[-1].output, out / "output.pcf")
    final = results[-1].output
    report = {
        "command": "run",
        "mode": Mode(args.mode).value,
        "input": {"rows": cloud.shape[0], "cols": cloud.shape[1]},
        "modules": modules,
        "output": {"rows": final.shape[0], "cols": final.shape[1], "path": "output.pcf"},
    }
    rows = [{k: v for k, v in m.items() if k not in ("widths", "artifacts")} for m in modules]
    sys.stdout.write(dumps_report(report) if args.format == "json" else rows_to_csv(rows))
    (out / "report.json").write_text(dumps_report(report))
    return EXIT_OK


def cmd_cost(args) -> int:
    if args.input is not None:
        n_in = ingest_cloud(args.input).shape[0]
    elif args.n_in is not None:
        n_in = args.n_in
    else:
        raise ConfigError("cost needs --input or --n-in")
    net = load_network(args.net, seed=args.seed)
    modes = [Mode.BASELINE, Mode.DELAYED] if args.mode == "both" else [Mode(args.mode)]
    modules, rows = [], []
    totals = {m.value: 0 for m in modes}
    for dims, cfg in zip(_module_dims(net, n_in), net.modules):
        cfg.validate(dims["n_in"], cfg.m_in)
        entry = {"index": dims["index"], "n_in": dims["n_in"], "n_out": cfg.n_out,
                 "k": cfg.k, "widths": cfg.mlp.widths}
        for m in modes:
            rep = module_cost(cfg, dims["n_in"], m)
            entry[m.value] = rep.to_dict()
            totals[m.value] += rep.macs_total
            rows.append({
                "module": dims["index"], "mode": m.value, "n_in": dims["n_in"],
                "n_out": cfg.n_out, "k": cfg.k, "macs_total": rep.macs_total,
                "macs_per_layer": ";".join(map(str, rep.macs_per_layer)),
                "activation_bytes_per_layer": ";".join(map(str, rep.activation_bytes_per_layer)),
                "aggregation_working_set_bytes": rep.aggregation_working_set_bytes,
                "nit_bytes": rep.nit_bytes, "pft_bytes": rep.pft_bytes,
            })
        ratio = mac_ratio(cfg, dims["n_in"])
        entry["mac_ratio"] = {"numerator": ratio.numerator, "denominator": ratio.denominator,
                              "reduction": float(1 / ratio)}
        modules.append(entry)
    report = {"command": "cost", "n_in": n_in, "modules": modules, "macs_total": totals}
    _emit(args, "cost", report, rows)
    return EXIT_OK


def cmd_simulate(args) -> int:
    au = _au_config(args)
    modules = []
    if args.nit is not None:
        if args.n_in is None or args.m_out is None:
            raise ConfigError("simulate --nit needs --n-in and --m-out")
        nit = read_nit_binary(args.nit)
        stats = simulate(nit, (args.n_in, args.m_out), au)
        modules.append({"index": 0, "n_in": args.n_in, "m_out": args.m_out,
                        "n_out": nit.n_out, "k": nit.k, "stats": stats.to_dict()})
    else:
        if args.input is None or args.net is None:
            raise ConfigError("simulate needs --nit, or --input with --net")
        cloud, net = _load(args)
        results = run_network_trace(cloud, net, Mode.DELAYED)
        for dims, res in zip(_module_dims(net, cloud.shape[0]), results):
            stats = simulate(res.nit, res.pft.shape, au)
            modules.append({"index": dims["index"], "n_in": dims["n_in"], "m_out": dims["m_out"],
                            "n_out": res.nit.n_out, "k": res.nit.k, "stats": stats.to_dict()})
    report = {"command": "simulate", "au": _au_header(au), "modules": modules}
    rows = [{"module": m["index"], "n_in": m["n_in"], "m_out": m["m_out"], "n_out": m["n_out"],
             "k": m["k"], **m["stats"]} for m in modules]
    _emit(args, "simulate", report, rows)
    return EXIT_OK


def cmd_compare(args) -> int:
    cloud, net = _load(args)
    div = divergence_report(cloud, net)
    report = {
        "command": "compare",
        "modules": _module_dims(net, cloud.shape[0]),
        "divergence": div.to_dict(),
    }
    _emit(args, "compare", report, [div.to_dict() | {"shape": "x".join(map(str, div.shape))}])
    return EXIT_OK


def cmd_synth(args) -> int:
    cloud = synth_cloud(args.n, args.seed if args.seed is not None else 42, args.distribution)
    path = Path(args.out_file)
    write_cloud(cloud, path, binary=not args.text)
    log.info("wrote %d points to %s", cloud.shape[0], path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mesokit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, need_input=True, need_net=True):
        p.add_argument("--input", required=need_input, help="point cloud (text or PCF1)")
        p.add_argument("--net", required=need_net, help="network config (JSON)")
        p.add_argument("--seed", type=int, default=None, help="network seed (default 42)")
        p.add_argument("--out", help="output directory (reports go to stdout otherwise)")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("run", help="execute a network and dump its artifacts")
    common(p)
    p.add_argument("--mode", choices=[m.value for m in Mode], default="delayed")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("cost", help="analytic MAC and footprint report")
    common(p, need_input=False)
    p.add_argument("--n-in", type=int, help="input point count when no --input is given")
    p.add_argument("--mode", choices=["both"] + [m.value for m in Mode], default="both")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("simulate", help="aggregation unit cycle statistics")
    common(p, need_input=False, need_net=False)
    p.add_argument("--nit", help="simulate a stored NIT1 file instead of running --net")
    p.add_argument("--n-in", type=int, help="PFT rows for --nit")
    p.add_argument("--m-out", type=int, help="PFT columns for --nit")
    p.add_argument("--au-banks", type=int, default=32)
    p.add_argument("--au-buffer-kb", type=float, default=64.0)
    p.add_argument("--au-nit-entries", type=int, default=128)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="baseline vs delayed divergence")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("synth", help="write a synthetic point cloud")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--distribution", choices=DISTRIBUTIONS, default="uniform-cube")
    p.add_argument("--text", action="store_true", help="write text instead of PCF1")
    p.add_argument("--out", dest="out_file", required=True, help="output file")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ParseError as exc:
        log.error("parse error: %s", exc)
        return EXIT_PARSE
    except (ConfigError, CapacityError, NitCapacityError, CorruptNitError, OSError, ValueError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
