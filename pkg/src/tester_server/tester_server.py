"""
Tester service for the FEM bus simulator.
This module sets up a Flask server that accepts faultload uploads, validates
them, and runs scenarios (uploaded or built-in), returning verdicts and traces.
"""

import json
import logging

from flask import Flask, jsonify, request

from src.config.config import (
    DEBUG_MODE,
    FAULTLOAD_ENDPOINT,
    GOLDEN_ENDPOINT,
    LOG_FORMAT,
    LOG_LEVEL,
    RUN_ENDPOINT,
    TESTER_HOST,
    TESTER_PORT,
)
from src.faultload.faultload import parse_faultload, serialize_faultload
from src.harness.outcome import verdict_to_record
from src.harness.runner import run_scenario
from src.harness.scenario import BUILTIN_SCENARIOS, parse_scenario
from src.harness.trace import serialize_trace
from src.utils.errors import FaultloadError, ScenarioError

# Set up logging
logging.basicConfig(level=LOG_LEVEL, format=LOG_FORMAT)
logger = logging.getLogger(__name__)

# Create Flask application
app = Flask(__name__)


def _run_response(scenario):
    trace, verdict = run_scenario(scenario)
    return jsonify({"verdict": verdict_to_record(verdict), "trace": serialize_trace(trace)})


@app.route('/health', methods=['GET'])
def health_check():
    """
    Health check endpoint to verify the server is running.

    Returns:
        JSON response indicating the server is healthy
    """
    return jsonify({"status": "healthy"})


@app.route(FAULTLOAD_ENDPOINT, methods=['POST'])
def upload_faultload():
    """
    Validate an uploaded faultload.

    Expects:
        - A POST request with the faultload file in the 'faultload' field

    Returns:
        - JSON with the canonical form on success, or every violation found
    """
    if 'faultload' not in request.files:
        logger.error("No faultload file in request")
        return jsonify({"error": "No faultload file provided"}), 400

    try:
        text = request.files['faultload'].read().decode('utf-8')
    except UnicodeDecodeError as e:
        logger.error(f"Faultload is not UTF-8: {str(e)}")
        return jsonify({"valid": False, "violations": ["file is not valid UTF-8"]}), 400

    try:
        faultload = parse_faultload(text)
    except FaultloadError as e:
        logger.info(f"Rejected faultload with {len(e.violations)} violation(s)")
        return jsonify({"valid": False, "violations": e.violations}), 400

    logger.info(f"Accepted faultload with {len(faultload)} spec(s)")
    return jsonify({"valid": True, "specs": len(faultload), "canonical": serialize_faultload(faultload)})


@app.route(RUN_ENDPOINT, methods=['POST'])
def run():
    """
    Run a scenario.

    Expects:
        - A POST request with a JSON scenario document, or {"builtin": name}

    Returns:
        - JSON with the verdict and the serialized trace
    """
    if not request.is_json:
        logger.error("Request does not contain JSON data")
        return jsonify({"error": "Request must be JSON"}), 400

    data = request.get_json(silent=True)
    if data is None:
        return jsonify({"error": "Malformed JSON"}), 400

    try:
        if isinstance(data, dict) and set(data) == {"builtin"}:
            name = data["builtin"]
            if name not in BUILTIN_SCENARIOS:
                return jsonify({"error": f"Unknown built-in scenario: {name}"}), 404
            scenario = BUILTIN_SCENARIOS[name]
        else:
            scenario = parse_scenario(data)
    except ScenarioError as e:
        logger.info(f"Rejected scenario: {e}")
        return jsonify({"error": "Invalid scenario", "violations": e.violations}), 400

    try:
        return _run_response(scenario)
    except Exception as e:
        logger.error(f"Error running scenario {scenario.name}: {str(e)}")
        return jsonify({"error": str(e)}), 500


@app.route(f"{GOLDEN_ENDPOINT}/<name>", methods=['GET'])
def golden(name):
    """Verdict and trace of a built-in scenario."""
    if name not in BUILTIN_SCENARIOS:
        return jsonify({"error": f"Unknown built-in scenario: {name}",
                        "available": sorted(BUILTIN_SCENARIOS)}), 404
    try:
        return _run_response(BUILTIN_SCENARIOS[name])
    except Exception as e:
        logger.error(f"Error running built-in scenario {name}: {str(e)}")
        return jsonify({"error": str(e)}), 500


def run_server(host: str = TESTER_HOST, port: int = TESTER_PORT):
    """
    Run the tester service.
    """
    logger.info(f"Starting tester service on {host}:{port}")
    app.run(host=host, port=port, debug=DEBUG_MODE)


if __name__ == '__main__':
    run_server()
