"""
Unit tests for the logging module.
"""

import logging
import sys
import unittest
from unittest.mock import MagicMock, patch

from flow_rbm.logging import Logger, logger


class TestLogging(unittest.TestCase):
    """Tests for the logging module functionality."""

    def tearDown(self):
        # Replace any mocked handlers with real ones
        Logger.configure()

    def test_logger_instance(self):
        """Test that logger is a properly configured logging.Logger instance."""
        self.assertIsInstance(logger, logging.Logger)
        self.assertEqual(logger.name, "flow_rbm")

    def test_get_logger(self):
        """Test that get_logger returns a logger with the correct name."""
        test_logger = Logger.get_logger("flow_rbm.training")
        self.assertIsInstance(test_logger, logging.Logger)
        self.assertEqual(test_logger.name, "flow_rbm.training")

    def test_get_logger_caching(self):
        """Test that get_logger caches loggers."""
        logger1 = Logger.get_logger("test_cache")
        logger2 = Logger.get_logger("test_cache")

        self.assertIs(logger1, logger2)

    @patch("logging.StreamHandler")
    def test_configure_default(self, mock_stream_handler):
        """Test that configure logs to stderr with the default format."""
        mock_handler = MagicMock()
        mock_stream_handler.return_value = mock_handler

        Logger.configure()

        mock_stream_handler.assert_called_once_with(sys.stderr)
        formatter = mock_handler.setFormatter.call_args[0][0]
        self.assertEqual(formatter._fmt, Logger.DEFAULT_FORMAT)

    @patch("logging.StreamHandler")
    def test_configure_level_name(self, mock_stream_handler):
        """Test that configure accepts level names as used by the CLI."""
        mock_stream_handler.return_value = MagicMock()

        Logger.configure(level="debug")

        self.assertEqual(Logger.get_logger().level, logging.DEBUG)

    @patch("logging.StreamHandler")
    def test_configure_replaces_handlers(self, mock_stream_handler):
        """Test that repeated configuration does not stack handlers."""
        mock_stream_handler.side_effect = lambda stream: MagicMock()

        Logger.configure()
        Logger.configure()

        self.assertEqual(len(Logger.get_logger().handlers), 1)

    @patch("logging.StreamHandler")
    def test_configure_format(self, mock_stream_handler):
        """Test that configure correctly configures logging format."""
        mock_handler = MagicMock()
        mock_stream_handler.return_value = mock_handler

        test_format = "%(levelname)s - %(message)s"
        Logger.configure(format_str=test_format)

        formatter = mock_handler.setFormatter.call_args[0][0]
        self.assertEqual(formatter._fmt, test_format)

    @patch("logging.FileHandler")
    def test_configure_file_logging(self, mock_file_handler):
        """Test configuring logging to a file without console output."""
        mock_handler = MagicMock()
        mock_file_handler.return_value = mock_handler

        Logger.configure(log_to_console=False, log_to_file="/tmp/flow_rbm_test.log")

        mock_file_handler.assert_called_once_with("/tmp/flow_rbm_test.log")
        self.assertEqual(Logger.get_logger().handlers, [mock_handler])
