"""FastAPI service exposing the fitting pipeline.

Endpoints are stateless: every request carries its data (and, where
needed, a previously fitted model document), so any number of clients can
share one instance. Numerical failures map to 422 responses with
kind="numerical"; bad inputs map to 400 with kind="argument".
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..biplot import backfit_paths, emit_biplot, rank_variables
from ..core import NestedSphereModel, fit_pns, inverse_score_map, score_map, variance_explained
from ..fastpns import fast_pns, lift_exact, lift_extrinsic, lift_tangent, project_reduced
from ..io import model_from_dict, model_to_dict
from ..simulate import calibrate_test, simulate_nested
from . import schemas


class NumericalError(RuntimeError):
    pass


def create_app() -> FastAPI:
    app = FastAPI(
        title="pns",
        version=__version__,
        description="Nested-subsphere fitting, scoring and biplots for spherical data.",
    )

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"detail": str(exc), "kind": "argument"})

    @app.exception_handler(NumericalError)
    async def _numerical_error(request: Request, exc: NumericalError):
        return JSONResponse(status_code=422, content={"detail": str(exc), "kind": "numerical"})

    @app.exception_handler(np.linalg.LinAlgError)
    async def _linalg_error(request: Request, exc: np.linalg.LinAlgError):
        return JSONResponse(status_code=422, content={"detail": str(exc), "kind": "numerical"})

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/fit", response_model=schemas.FitResponse)
    def fit(req: schemas.FitRequest):
        data = np.asarray(req.data, dtype=float)
        result = fit_pns(data, mode=req.mode, alpha=req.alpha)
        return _fit_response(result, basis=None)

    @app.post("/fastpns", response_model=schemas.FitResponse)
    def fastpns(req: schemas.FastPnsRequest):
        data = np.asarray(req.data, dtype=float)
        result = fast_pns(data, p=req.p, mode=req.mode, alpha=req.alpha)
        return _fit_response(result.fit, basis=result.basis)

    @app.post("/scores", response_model=schemas.ScoresResponse)
    def scores(req: schemas.ScoresRequest):
        model, basis = model_from_dict(req.model)
        data = np.asarray(req.data, dtype=float)
        if basis is not None:
            data = project_reduced(data, basis)
        return schemas.ScoresResponse(scores=score_map(data, model).tolist())

    @app.post("/reconstruct", response_model=schemas.ReconstructResponse)
    def reconstruct(req: schemas.ReconstructRequest):
        model, basis = model_from_dict(req.model)
        pts = inverse_score_map(np.asarray(req.scores, dtype=float), model)
        if basis is not None:
            lift = {"exact": lift_exact, "tangent": lift_tangent,
                    "extrinsic": lift_extrinsic}[req.lift]
            pts = lift(pts, basis)
        return schemas.ReconstructResponse(points=pts.tolist())

    @app.post("/biplot", response_model=schemas.BiplotResponse)
    def biplot(req: schemas.BiplotRequest):
        model, basis = model_from_dict(req.model)
        data = np.asarray(req.data, dtype=float)
        if basis is not None:
            data = project_reduced(data, basis)
        sc = score_map(data, model)
        paths = backfit_paths(model, sc, basis=basis,
                              grid_points=req.grid_points, pair=req.pair)
        svg, paths_csv, scores_csv = emit_biplot(paths, sc, labels=req.labels, pair=req.pair)
        return schemas.BiplotResponse(
            svg=svg,
            paths_csv=paths_csv,
            scores_csv=scores_csv,
            paths=[
                schemas.PathReport(
                    variable_index=p.variable_index,
                    path_length=p.path_length,
                    clipped=p.clipped,
                )
                for p in paths
            ],
            ranking=rank_variables(paths, len(paths)),
        )

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate(req: schemas.SimulateRequest):
        data, truth = simulate_nested(
            d=req.dim, n=req.n, radii=req.radii, noise_sd=req.noise_sd,
            seed=req.seed, pns1_sd=req.pns1_sd,
        )
        truth_doc = {
            "model": model_to_dict(truth.model),
            "radii": list(truth.radii),
            "noise_sd": truth.noise_sd,
            "pns1_sd": truth.pns1_sd,
            "seed": truth.seed,
        }
        return schemas.SimulateResponse(data=data.tolist(), truth=truth_doc)

    @app.post("/calibrate", response_model=schemas.CalibrateResponse)
    def calibrate(req: schemas.CalibrateRequest):
        rep = calibrate_test(
            test=req.test, replicates=req.replicates, n=req.n, d=req.dim,
            noise_sd=req.noise_sd, alpha=req.alpha, seed=req.seed,
        )
        return schemas.CalibrateResponse(
            test=rep.test, replicates=rep.replicates, n=rep.n, dim=rep.d,
            noise_sd=rep.noise_sd, alpha=rep.alpha, seed=rep.seed,
            rejection_rate=rep.rejection_rate, p_uniform_ks=rep.p_uniform_ks,
            p_value_mean=float(rep.p_values.mean()),
        )

    return app


def _fit_response(result, basis) -> schemas.FitResponse:
    model = result.model
    levels = [
        schemas.LevelReport(
            level=i + 1,
            sphere_dim=rec.sphere_dim,
            choice=rec.choice,
            angle=rec.angle,
            test_name=rec.test.test if rec.test else None,
            statistic=rec.test.statistic if rec.test else None,
            p_value=rec.test.p_value if rec.test else None,
            rss_great=rec.rss_great,
            rss_small=rec.rss_small,
            converged=rec.converged,
        )
        for i, rec in enumerate(model.level_choices)
    ]
    report = schemas.FitReport(
        n=result.scores.shape[0],
        ambient_dim=model.ambient_dim,
        mode=model.mode,
        alpha=model.alpha,
        levels=levels,
        final_mean=model.final_mean,
        cumulative_radii=model.cumulative_radii.tolist(),
        variance_explained=variance_explained(result.scores).tolist(),
        free_parameters=model.free_parameters(),
        truncated=model.truncated,
        pca_pct_variance=basis.pct_variance if basis is not None else None,
        pca_p=basis.p if basis is not None else None,
    )
    return schemas.FitResponse(
        model=model_to_dict(model, basis=basis),
        scores=result.scores.tolist(),
        residuals=result.residuals.tolist(),
        report=report,
    )
