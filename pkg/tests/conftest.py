import pytest

from cli_fixtures import write_dstc2


@pytest.fixture
def dstc2_file(tmp_path):
    return write_dstc2(tmp_path / "dstc2.jsonl")
