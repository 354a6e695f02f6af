"""
Unit tests for the HTTP utilities.
"""

import unittest
from unittest.mock import patch, MagicMock

import requests

from src.utils.http_utils import (
    upload_faultload,
    get_server_health,
    build_server_url
)

FAULTLOAD = '{"version":"1"}\n'


class TestHttpUtils(unittest.TestCase):
    """Test cases for the HTTP utilities."""

    def test_build_server_url(self):
        """Test building server URL from host and port."""
        # Test with localhost
        url = build_server_url('localhost', 5000)
        self.assertEqual(url, 'http://localhost:5000')

        # Test with IP address
        url = build_server_url('192.168.1.100', 8080)
        self.assertEqual(url, 'http://192.168.1.100:8080')

    @patch('requests.get')
    def test_get_server_health_success(self, mock_get):
        """Test server health check when server is healthy."""
        mock_response = MagicMock()
        mock_response.status_code = 200
        mock_get.return_value = mock_response

        result = get_server_health('http://test-server:5000')

        self.assertTrue(result)
        mock_get.assert_called_once_with('http://test-server:5000/health')

    @patch('requests.get')
    def test_get_server_health_failure(self, mock_get):
        """Test server health check when server is not healthy."""
        mock_response = MagicMock()
        mock_response.status_code = 500
        mock_get.return_value = mock_response

        result = get_server_health('http://test-server:5000')

        self.assertFalse(result)
        mock_get.assert_called_once_with('http://test-server:5000/health')

    @patch('requests.get')
    def test_get_server_health_exception(self, mock_get):
        """Test server health check when the connection fails."""
        mock_get.side_effect = requests.exceptions.ConnectionError('Connection error')

        result = get_server_health('http://test-server:5000')

        self.assertFalse(result)
        mock_get.assert_called_once_with('http://test-server:5000/health')

    @patch('requests.post')
    def test_upload_faultload_success(self, mock_post):
        """Test uploading a faultload the server accepts."""
        mock_response = MagicMock()
        mock_response.status_code = 200
        mock_response.json.return_value = {"valid": True, "specs": 0, "canonical": FAULTLOAD}
        mock_post.return_value = mock_response

        success, body = upload_faultload('http://test-server:5000', '/api/faultload', FAULTLOAD)

        self.assertTrue(success)
        self.assertEqual(body["specs"], 0)

        # Verify the request was made correctly
        mock_post.assert_called_once()
        args, kwargs = mock_post.call_args
        self.assertEqual(args[0], 'http://test-server:5000/api/faultload')
        self.assertIn('faultload', kwargs['files'])
        self.assertEqual(kwargs['files']['faultload'][1], FAULTLOAD.encode('utf-8'))

    @patch('requests.post')
    def test_upload_faultload_rejected(self, mock_post):
        """Test uploading a faultload the server rejects."""
        mock_response = MagicMock()
        mock_response.status_code = 400
        mock_response.text = '{"valid": false}'
        mock_response.json.return_value = {"valid": False, "violations": ["line 1: missing header"]}
        mock_post.return_value = mock_response

        success, body = upload_faultload('http://test-server:5000', '/api/faultload', '')

        self.assertFalse(success)
        self.assertEqual(body["violations"], ["line 1: missing header"])

    @patch('requests.post')
    def test_upload_faultload_non_json_error(self, mock_post):
        """Test a server error without a JSON body."""
        mock_response = MagicMock()
        mock_response.status_code = 500
        mock_response.text = 'Internal Server Error'
        mock_response.json.side_effect = ValueError('No JSON object could be decoded')
        mock_post.return_value = mock_response

        success, body = upload_faultload('http://test-server:5000', '/api/faultload', FAULTLOAD)

        self.assertFalse(success)
        self.assertIsNone(body)

    @patch('requests.post')
    def test_upload_faultload_exception(self, mock_post):
        """Test uploading when the request throws an exception."""
        mock_post.side_effect = requests.exceptions.ConnectionError('Connection error')

        success, body = upload_faultload('http://test-server:5000', '/api/faultload', FAULTLOAD)

        self.assertFalse(success)
        self.assertIsNone(body)
        mock_post.assert_called_once()


if __name__ == '__main__':
    unittest.main()
