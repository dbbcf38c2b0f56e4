"""Command-line client for the fitting service.

Every subcommand builds a request, sends it to the service (an in-process
application instance by default, or a remote server via --server) and
writes the response payloads to files. Exit codes: 0 success, 1 numerical
failure, 2 argument or I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .io import atomic_write_text, dumps_model, load_csv, write_matrix_csv

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_IO = 2


class ClientError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _make_client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="Using `httpx` with `starlette.testclient`")
        from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


def _post(client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code != 200:
        try:
            body = resp.json()
        except ValueError:
            body = {"detail": resp.text}
        detail = body.get("detail", "request failed")
        kind = body.get("kind", "argument")
        code = EXIT_NUMERICAL if kind == "numerical" else EXIT_IO
        raise ClientError(f"{path}: {detail}", code)
    return resp.json()


def _load_data(args) -> tuple:
    ds = load_csv(args.data, normalize=args.normalize, transpose=args.transpose)
    return ds.matrix.tolist(), ds


def _write_outputs(out_dir: str, files: dict[str, str]) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for name, text in files.items():
        atomic_write_text(os.path.join(out_dir, name), text)


def _print_report(report: dict) -> None:
    print(f"n = {report['n']}, sphere dimension d = {report['ambient_dim']}, "
          f"mode = {report['mode']}, alpha = {report['alpha']}")
    if report.get("pca_p"):
        print(f"PCA reduction: p = {report['pca_p']} "
              f"({report['pca_pct_variance']:.2f}% of tangent variance)")
    for lv in report["levels"]:
        extra = ""
        if lv["test_name"]:
            extra = f"  {lv['test_name']}: stat = {lv['statistic']:.4g}"
            if lv["p_value"] is not None:
                extra += f", p = {lv['p_value']:.4g}"
        print(f"  level {lv['level']} (S^{lv['sphere_dim']}): {lv['choice']:5s} "
              f"angle = {lv['angle']:.6f}{extra}")
    radii = ", ".join(f"{r:.4f}" for r in report["cumulative_radii"])
    pct = ", ".join(f"{v:.2f}" for v in report["variance_explained"])
    print(f"cumulative radii: {radii}")
    print(f"variance explained (%): {pct}")
    if report["truncated"]:
        print("note: data collapsed to a point before the last level; model truncated")


def _scores_header(d: int) -> list[str]:
    return [f"pns{j + 1}" for j in range(d)]


def cmd_fit(args, client) -> int:
    matrix, _ = _load_data(args)
    path = "/fastpns" if args.command == "fastpns" else "/fit"
    payload = {"data": matrix, "mode": args.mode, "alpha": args.alpha}
    if args.command == "fastpns":
        payload["p"] = args.pcs
    out = _post(client, path, payload)
    d = out["report"]["ambient_dim"]
    _write_outputs(args.out_dir, {
        "model.json": dumps_model(out["model"]),
        "scores.csv": write_matrix_csv(out["scores"], header=_scores_header(d)),
        "report.json": dumps_model(out["report"]),
    })
    _print_report(out["report"])
    print(f"wrote model.json, scores.csv, report.json to {args.out_dir}")
    return EXIT_OK


def cmd_scores(args, client) -> int:
    with open(args.model) as fh:
        model = json.load(fh)
    matrix, _ = _load_data(args)
    out = _post(client, "/scores", {"model": model, "data": matrix})
    d = len(out["scores"][0])
    _write_outputs(args.out_dir, {
        "scores.csv": write_matrix_csv(out["scores"], header=_scores_header(d)),
    })
    print(f"wrote scores.csv ({len(out['scores'])} rows) to {args.out_dir}")
    return EXIT_OK


def cmd_biplot(args, client) -> int:
    with open(args.model) as fh:
        model = json.load(fh)
    matrix, ds = _load_data(args)
    labels = None
    if args.labels:
        with open(args.labels) as fh:
            labels = [line.strip() for line in fh if line.strip()]
    elif ds.row_labels:
        labels = ds.row_labels
    payload = {
        "model": model,
        "data": matrix,
        "labels": labels,
        "grid_points": args.grid_points,
        "pair": _parse_pair(args.pair),
    }
    out = _post(client, "/biplot", payload)
    _write_outputs(args.out_dir, {
        "biplot.svg": out["svg"],
        "biplot_paths.csv": out["paths_csv"],
        "biplot_scores.csv": out["scores_csv"],
    })
    top = out["ranking"][: min(10, len(out["ranking"]))]
    print(f"top variables by path length: {top}")
    print(f"wrote biplot.svg, biplot_paths.csv, biplot_scores.csv to {args.out_dir}")
    return EXIT_OK


def cmd_simulate(args, client) -> int:
    payload = {
        "dim": args.dim,
        "n": args.n,
        "radii": _parse_floats(args.radii),
        "noise_sd": args.noise_sd,
        "pns1_sd": args.pns1_sd,
        "seed": args.seed,
    }
    out = _post(client, "/simulate", payload)
    _write_outputs(args.out_dir, {
        "data.csv": write_matrix_csv(out["data"]),
        "truth.json": dumps_model(out["truth"]),
    })
    print(f"wrote data.csv ({args.n} x {args.dim + 1}) and truth.json to {args.out_dir}")
    return EXIT_OK


def cmd_calibrate(args, client) -> int:
    payload = {
        "test": args.test,
        "replicates": args.replicates,
        "n": args.n,
        "dim": args.dim,
        "noise_sd": args.noise_sd,
        "alpha": args.alpha,
        "seed": args.seed,
    }
    out = _post(client, "/calibrate", payload)
    _write_outputs(args.out_dir, {"calibration.json": dumps_model(out)})
    print(f"{out['test']} test, {out['replicates']} replicates at alpha = {out['alpha']}:")
    print(f"  rejection rate  = {out['rejection_rate']:.4f}")
    print(f"  p-value KS dist = {out['p_uniform_ks']:.4f} (vs uniform)")
    print(f"  mean p-value    = {out['p_value_mean']:.4f}")
    return EXIT_OK


def cmd_serve(args, client=None) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ClientError(f"cannot parse float list: {text!r}", EXIT_IO)


def _parse_pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(tok) for tok in text.split(","))
        return a, b
    except ValueError:
        raise ClientError(f"cannot parse score pair: {text!r}", EXIT_IO)


def _add_common(sub, data: bool = True):
    if data:
        sub.add_argument("data", help="CSV file, rows = observations")
        sub.add_argument("--normalize", action=argparse.BooleanOptionalAction,
                         default=True, help="divide each row by its norm (default on)")
        sub.add_argument("--transpose", action="store_true",
                         help="input file has observations in columns")
    sub.add_argument("--out-dir", default=".", help="directory for output files")
    sub.add_argument("--server", default=None,
                     help="URL of a running service; default runs in-process")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pns",
        description="Principal nested spheres: fit, score and visualize spherical data.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    fit = subs.add_parser("fit", help="fit the nested-sphere sequence")
    fastp = subs.add_parser("fastpns", help="PCA-reduced fit for high dimensions")
    for sub in (fit, fastp):
        _add_common(sub)
        sub.add_argument("--mode", default="small",
                         choices=["small", "great", "ks", "var", "lr", "bic"])
        sub.add_argument("--alpha", type=float, default=0.05)
    fastp.add_argument("--pcs", type=int, default=None,
                       help="number of principal components (default: 95%% of variance, max 30)")

    scores = subs.add_parser("scores", help="score new data under a saved model")
    scores.add_argument("model", help="model.json from a previous fit")
    _add_common(scores)

    biplot = subs.add_parser("biplot", help="back-fitted variable paths and score scatter")
    biplot.add_argument("model", help="model.json from a previous fit")
    _add_common(biplot)
    biplot.add_argument("--labels", default=None, help="file with one group label per row")
    biplot.add_argument("--grid-points", type=int, default=41)
    biplot.add_argument("--pair", default="1,2", help="score pair to sweep, e.g. 1,2")

    sim = subs.add_parser("simulate", help="draw synthetic data from a known model")
    _add_common(sim, data=False)
    sim.add_argument("--dim", type=int, required=True, help="sphere dimension d")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--radii", required=True, help="comma-separated level angles")
    sim.add_argument("--noise-sd", type=float, default=0.05)
    sim.add_argument("--pns1-sd", type=float, default=None,
                     help="sd of the circular score (default: uniform)")
    sim.add_argument("--seed", type=int, default=0)

    cal = subs.add_parser("calibrate", help="null rejection rate of a level test")
    _add_common(cal, data=False)
    cal.add_argument("--test", required=True, choices=["ks", "var", "lr"])
    cal.add_argument("--replicates", type=int, default=1000)
    cal.add_argument("--n", type=int, default=100)
    cal.add_argument("--dim", type=int, default=2)
    cal.add_argument("--noise-sd", type=float, default=0.1)
    cal.add_argument("--alpha", type=float, default=0.05)
    cal.add_argument("--seed", type=int, default=0)

    serve = subs.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)

    return parser


_HANDLERS = {
    "fit": cmd_fit,
    "fastpns": cmd_fit,
    "scores": cmd_scores,
    "biplot": cmd_biplot,
    "simulate": cmd_simulate,
    "calibrate": cmd_calibrate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    try:
        client = _make_client(args.server)
    except Exception as exc:  # connection setup
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        with client:
            return _HANDLERS[args.command](args, client)
    except ClientError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
