import logging

from src.utils.logger import setup_logging


def test_library_loggers_share_the_console_handler():
    root = setup_logging("DEBUG", module_name="nilorbit-console")
    package = logging.getLogger("src")
    assert root.level == logging.DEBUG
    assert package.handlers == root.handlers
    assert not package.propagate


def test_file_handler_writes_library_records(tmp_path):
    path = tmp_path / "runs" / "weyl.log"
    root = setup_logging("INFO", path, module_name="nilorbit-file")
    logging.getLogger("src.core.weyl").info("spectrum computed")
    for handler in root.handlers:
        handler.flush()
    text = path.read_text(encoding="utf-8")
    assert "Logging to file" in text
    assert "src.core.weyl - INFO - spectrum computed" in text
    for handler in list(root.handlers):
        handler.close()
        root.removeHandler(handler)
    logging.getLogger("src").handlers = []


def test_unknown_level_falls_back_to_info():
    root = setup_logging("chatty", module_name="nilorbit-level")
    assert root.level == logging.INFO
