import json
import hashlib
import pytest
from pathlib import Path

from ..results import SCHEMA_VERSION, canonical_json, format_value, read_csv, render_csv, write_results


def test_format_value():
    assert format_value(True) == 'true'
    assert format_value(0.1 + 0.2) == '0.3'
    assert format_value(1 / 3) == '0.3333333333'
    assert format_value(3) == '3'
    assert format_value(1 - 2j) == '1-2j'


def test_canonical_json_sorts_keys():
    assert canonical_json({'b': 1, 'a': [1, 2]}) == '{"a":[1,2],"b":1}'


def test_render_csv_header():
    text = render_csv([{'x': 1.0, 'y': 'g'}], ('x', 'y'), {'seed': 0}, "0.1.0")
    lines = text.splitlines()
    assert lines[0] == f"# schema={SCHEMA_VERSION}"
    assert lines[1] == "# version=0.1.0"
    assert lines[2] == '# config={"seed":0}'
    assert lines[3:] == ['x,y', '1,g']


def test_render_csv_missing_column():
    with pytest.raises(KeyError):
        render_csv([{'x': 1.0}], ('x', 'y'), {}, "0.1.0")


def test_write_results(tmp_path: Path):
    rows = [{'pieces': m, 'fidelity': 1 - 0.01 / m} for m in (1, 2, 4)]
    files = write_results(tmp_path / 'out', 'pieces', rows, ('pieces', 'fidelity'), {'seed': 3}, "0.1.0",
                          {'description': 'test'})
    assert files.digest == hashlib.sha256(files.csv_path.read_bytes()).hexdigest()
    sidecar = json.loads(files.json_path.read_text())
    assert sidecar['csv_sha256'] == files.digest
    assert sidecar['rows'] == 3
    assert sidecar['description'] == 'test'
    header, parsed = read_csv(files.csv_path)
    assert header['schema'] == str(SCHEMA_VERSION)
    assert json.loads(header['config']) == {'seed': 3}
    assert [r['pieces'] for r in parsed] == ['1', '2', '4']
