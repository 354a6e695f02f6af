"""
HTTP utilities for talking to the tester service.
This module provides functions for uploading faultloads and checking the
service health.
"""

import logging
from typing import Any, Dict, Optional, Tuple

import requests

logger = logging.getLogger(__name__)


def upload_faultload(server_url: str, endpoint: str, faultload_text: str) -> Tuple[bool, Optional[Dict[str, Any]]]:
    """
    Send a faultload file to the tester service for validation.

    Args:
        server_url: Base URL of the tester service
        endpoint: API endpoint to send the faultload to
        faultload_text: Faultload file contents

    Returns:
        Tuple of (success, body)
        - success: Boolean indicating if the faultload was accepted
        - body: Decoded JSON body (violations on rejection), None on transport errors
    """
    url = f"{server_url}{endpoint}"

    try:
        files = {'faultload': ('faultload.jsonl', faultload_text.encode('utf-8'), 'application/x-ndjson')}
        response = requests.post(url, files=files)

        try:
            body = response.json()
        except ValueError:
            body = None

        if response.status_code == 200:
            return True, body
        else:
            logger.error(f"Server returned error: {response.status_code} - {response.text}")
            return False, body

    except requests.exceptions.RequestException as e:
        logger.error(f"Request failed: {str(e)}")
        return False, None


def get_server_health(server_url: str) -> bool:
    """
    Check if the tester service is running and healthy.

    Args:
        server_url: Base URL of the tester service

    Returns:
        Boolean indicating if the service is healthy
    """
    try:
        response = requests.get(f"{server_url}/health")
        return response.status_code == 200
    except requests.exceptions.RequestException:
        return False


def build_server_url(host: str, port: int) -> str:
    """
    Build the server URL from host and port.

    Args:
        host: Server hostname or IP address
        port: Server port number

    Returns:
        Complete server URL
    """
    return f"http://{host}:{port}"
