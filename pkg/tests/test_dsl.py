import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ism.dsl import ModelFile, ModelFileError, format_file, load_model, parse_model, serialize_model

from .corpus import MODELS, random_model

GOLDEN = sorted(MODELS.glob("*.ism"))

TRAIN = """
system train {
  states away, wait, bridge;
  init away;
  inputs in {go};
  outputs out {arrived, left};
  accept away;
  trans away -> wait : eps / out.arrived;
  trans wait -> bridge : in.go / eps;
  trans bridge -> away : eps / out.left;
}
"""


def locate(text, needle, nth=0):
    """1-based (line, column) of the nth occurrence of ``needle``."""
    pos = -1
    for _ in range(nth + 1):
        pos = text.index(needle, pos + 1)
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def test_bridge_golden_file(bridge_model):
    m = bridge_model
    assert m.name == "bridge" and m.version == "1"
    assert len(m.systems) == 3 and len(m.protocols) == 1
    assert len(m.protocols["bridge"].channels) == 4
    assert len(m.protocol().product.states) <= 27


@pytest.mark.parametrize("path", GOLDEN, ids=lambda p: p.name)
def test_golden_files_are_canonical(path):
    text = path.read_text()
    res = parse_model(text, str(path))
    assert res.ok, res.diagnostics
    assert serialize_model(res.model) == text
    again = parse_model(serialize_model(res.model), str(path))
    assert again.model == res.model
    assert format_file(str(path)) == text


def test_simple_system_parses():
    res = parse_model(TRAIN)
    assert res.ok and res.diagnostics == []
    ts = res.model.system("train")
    assert ts.initial == "away" and len(ts.transitions) == 3


def test_undeclared_state_location():
    text = TRAIN.replace("wait -> bridge", "wait -> limbo")
    res = parse_model(text)
    assert not res.ok
    (d,) = res.errors
    assert "limbo" in d.message and d.token == "limbo"
    assert (d.line, d.column) == locate(text, "limbo")


def test_recovery_reports_every_error():
    text = TRAIN.replace("wait -> bridge", "wait -> limbo") \
                .replace("eps / out.left", "eps / out.gone") \
                .replace("init away;", "init away\n  bogus;")
    res = parse_model(text)
    messages = [d.message for d in res.errors]
    assert len(messages) >= 3
    assert any("limbo" in m for m in messages)
    assert any("'gone'" in m for m in messages)
    lines = text.splitlines()
    for d in res.diagnostics:
        assert 1 <= d.line <= len(lines)
        assert 1 <= d.column <= len(lines[d.line - 1]) + 1


def test_errors_in_several_items():
    text = "system a { states s; init t; }\nprotocol p { role r : nothing; }\nsystem { }\n"
    res = parse_model(text)
    assert len(res.errors) >= 3
    assert [d.line for d in res.errors] == sorted(d.line for d in res.errors)


def test_empty_file():
    res = parse_model("")
    assert res.ok and res.diagnostics == []
    assert res.model == ModelFile()
    assert serialize_model(res.model) == ""
    assert parse_model("# only a comment\n").model == ModelFile()


def test_minimal_output_for_bare_system():
    text = "system s { states a; init a; }\n"
    m = parse_model(text).model
    assert serialize_model(m) == "system s {\n  states a;\n  init a;\n}\n"


def test_imports_resolve_relative_to_file():
    m = load_model(MODELS / "bridge_deadlock.ism")
    assert "train1" in m.all_names("systems")
    assert m.protocol().name == "bridge_deadlock"
    assert "bridge.ism" in m.imports


def test_missing_import_is_a_diagnostic(tmp_path):
    f = tmp_path / "x.ism"
    f.write_text('import "nowhere.ism";\n')
    with pytest.raises(ModelFileError) as exc:
        load_model(f)
    assert exc.value.diagnostics[0].line == 1


def test_import_cycle(tmp_path):
    (tmp_path / "a.ism").write_text('import "b.ism";\n')
    (tmp_path / "b.ism").write_text('import "a.ism";\n')
    with pytest.raises(ModelFileError, match="cycl"):
        load_model(tmp_path / "a.ism")


def test_role_needs_accepting_state():
    text = TRAIN.replace("  accept away;\n", "") + "protocol p { role t : train; }\n"
    res = parse_model(text)
    assert any("accepting" in d.message for d in res.errors)


def test_channel_alphabet_checked():
    text = TRAIN + TRAIN.replace("system train", "system other") + \
        "protocol p { role a : train; role b : other; channel a.out -> b.in; }\n"
    res = parse_model(text)
    assert any("cannot receive" in d.message for d in res.errors)
    line, _ = locate(text, "channel a.out")
    assert res.errors[0].line == line


def test_partition_must_cover():
    text = (MODELS / "tank.ism").read_text().replace("    trans full_2 -> filled_1 : take.dx / level.x1;\n", "")
    res = parse_model(text)
    assert any("misses" in d.message for d in res.errors)


def test_unterminated_string_and_bad_characters():
    res = parse_model('model m version "1;\n')
    assert not res.ok
    res = parse_model("system s { states a; init a; } $\n")
    assert not res.ok and res.errors[0].line == 1


@settings(max_examples=500, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_generated_models_round_trip(seed):
    m = random_model(random.Random(seed))
    text = serialize_model(m)
    res = parse_model(text)
    assert res.ok, (text, res.diagnostics)
    assert res.model == m
    assert serialize_model(res.model) == text
