from dotenv import load_dotenv
load_dotenv()

from flask import Flask, jsonify, request
from flask.json.provider import DefaultJSONProvider
from flask_cors import CORS

import config
from cli import RunConfig, classification_report, json_default, pair_record, parse_vector
from errors import InvalidInputError, TwoQubitError
from figures import DEFAULT_GRID, DEFAULT_STEP, build_figure
from rsp import evaluate

DEBUG = config.FLASK_DEBUG.lower() in ("1", "true", "yes")


class NumpyJSONProvider(DefaultJSONProvider):
    """Serializes numpy scalars and arrays returned by the library"""

    @staticmethod
    def default(o):
        try:
            return json_default(o)
        except TypeError:
            return DefaultJSONProvider.default(o)


app = Flask(__name__)
app.json = NumpyJSONProvider(app)
CORS(app)


def _arg(name: str, convert=float, default=None):
    """Query parameter converted with `convert`; absent or empty gives `default`."""
    raw = request.args.get(name)
    if raw is None or raw == "":
        return default
    try:
        return convert(raw)
    except ValueError as e:
        raise InvalidInputError(f"bad value for {name}: {raw!r}") from e


def _run_config(command: str) -> RunConfig:
    """Request parameters layered over the environment defaults."""
    return RunConfig(
        command=command,
        kappa=_arg("kappa"),
        c_hat=_arg("c_hat", parse_vector),
        lam=_arg("lambda"),
        b=_arg("b", parse_vector),
        target=_arg("target", parse_vector),
        beta=_arg("beta", parse_vector),
        quad_theta=_arg("quad_theta", int, config.QUAD_THETA),
        quad_phi=_arg("quad_phi", int, config.QUAD_PHI),
    )


def _failure(e: Exception):
    status = 400 if isinstance(e, TwoQubitError) else 500
    return jsonify({"success": False, "error": str(e)}), status


@app.route("/api/classify")
def get_classify():
    """Symmetry class, orbit sizes and Omega_Max dimension of an MMMS"""
    try:
        cfg = _run_config("classify")
        if cfg.kappa is None:
            raise InvalidInputError("kappa is required")
        data = classification_report(cfg.kappa, cfg.direction())
        return jsonify({"success": True, "data": data})
    except Exception as e:
        return _failure(e)


@app.route("/api/mi")
def get_mi():
    """Mutual information and joint outcome table for one pair of observables"""
    try:
        cfg = _run_config("mi")
        n = _arg("n", parse_vector)
        m = _arg("m", parse_vector)
        if n is None or m is None:
            raise InvalidInputError("n and m are required")
        data = pair_record(cfg.state(), n, m)
        return jsonify({"success": True, "data": data})
    except Exception as e:
        return _failure(e)


@app.route("/api/rsp-eval")
def get_rsp_eval():
    """Optimal-measurement RSP evaluation for a single target"""
    try:
        cfg = _run_config("rsp-eval")
        data = evaluate(cfg.state(), cfg.task()).as_dict()
        return jsonify({"success": True, "data": data})
    except Exception as e:
        return _failure(e)


@app.route("/api/figure/<int:figure_id>")
def get_figure(figure_id):
    """Data table behind a figure"""
    try:
        cfg = _run_config("figure")
        table = build_figure(
            figure_id,
            step=_arg("step", float, DEFAULT_STEP),
            grid=_arg("grid", int, DEFAULT_GRID),
            normalize=_arg("normalize", str, "isotropic"),
            quad=cfg.quadrature(),
        )
        return jsonify({"success": True, "data": {"columns": table.columns, "rows": table.rows}})
    except Exception as e:
        return _failure(e)


@app.route("/api/config")
def get_config():
    """Effective configuration from the environment"""
    try:
        return jsonify({"success": True, "data": config.effective_config()})
    except Exception as e:
        return _failure(e)


if __name__ == "__main__":
    app.run(debug=DEBUG, host="0.0.0.0", port=config.PORT)
