import numpy as np
import pytest

from workstats.documents import Fig1Run, Fig4Run, VerifyRun, build_protocol, load_run, parse_matrix, parse_run
from workstats.errors import ConfigError
from workstats.tpm import MeasurementEvent, UnitarySegment

TPM_YAML = """
kind: tpm
beta: 0.5
h_i: [[1, 0, 0], [0, 0, 0], [0, 0, -1]]
h_f: [[0, "0.5-0.5j", 0], ["0.5+0.5j", 0, 0], [0, 0, 1]]
segments:
  - generator: [[0, 1, 0], [1, 0, 1], [0, 1, 0]]
    duration: 0.3
  - measurement: projective
    time: 1.0
  - measurement: reset
    target: 2
    time: 2.0
  - unitary: [[0, 1, 0], [1, 0, 0], [0, 0, 1]]
"""


def test_defaults_without_config():
    assert load_run(None, "fig1") == Fig1Run()
    assert Fig1Run().h == [0.5, 1.0, 1.5]


def test_fields_are_coerced():
    run = parse_run({"kind": "fig4", "gamma": [0, 2], "t_max": 3, "size": 50})
    assert run == Fig4Run(gamma=[0.0, 2.0], t_max=3.0, size=50)
    assert isinstance(run.gamma[0], float)


def test_yaml_tpm_document(tmp_path):
    path = tmp_path / "tpm.yaml"
    path.write_text(TPM_YAML)
    protocol = build_protocol(load_run(path, "tpm"))
    assert protocol.dim == 3
    assert [type(s) for s in protocol.segments] == [UnitarySegment, MeasurementEvent, MeasurementEvent,
                                                    UnitarySegment]
    assert protocol.h_f[0, 1] == 0.5 - 0.5j
    assert not protocol.is_unital


def test_json_document(tmp_path):
    path = tmp_path / "verify.json"
    path.write_text('{"kind": "verify", "protocols": 3}')
    assert load_run(path, "verify") == VerifyRun(protocols=3)


@pytest.mark.parametrize("document,path", [
    ([1, 2], "<document>"),
    ({"h": [0.5]}, "kind"),
    ({"kind": "fig9"}, "kind"),
    ({"kind": "fig3"}, "kind"),
    ({"kind": "fig1", "colour": 1}, "colour"),
    ({"kind": "fig1", "h": [0.5, "x"]}, "h[1]"),
    ({"kind": "fig1", "n_k": 1.5}, "n_k"),
    ({"kind": "fig1", "gamma_step": 0}, "gamma_step"),
])
def test_errors_name_the_field(document, path):
    with pytest.raises(ConfigError) as info:
        parse_run(document, "fig1")
    assert info.value.path == path


@pytest.mark.parametrize("segment,path", [
    ({"measurement": "projective"}, "segments[0].time"),
    ({"measurement": "weak", "time": 1.0}, "segments[0].measurement"),
    ({"generator": [[1, 0], [0, -1]]}, "segments[0].duration"),
    ({"unitary": [[1, 0], [0, "i"]]}, "segments[0].unitary[1][1]"),
    ({"unitary": [[1, 1], [0, 1]]}, "segments[0]"),
    ({"pause": 1}, "segments[0]"),
    ({"measurement": "kraus", "time": 1.0, "operators": [[[1, 0], [0, 0.5]]]}, "segments[0]"),
])
def test_segment_errors_name_the_field(segment, path):
    run = parse_run({"kind": "tpm", "h_i": [[1, 0], [0, -1]], "h_f": [[1, 0], [0, -1]], "segments": [segment]})
    with pytest.raises(ConfigError) as info:
        build_protocol(run)
    assert info.value.path == path


def test_parse_matrix():
    m = parse_matrix([[1, "2j"], ["1 - 1j", 0.5]], "m")
    np.testing.assert_array_equal(m, np.array([[1, 2j], [1 - 1j, 0.5]]))
    with pytest.raises(ConfigError):
        parse_matrix([[1, 2]], "m")
    with pytest.raises(ConfigError):
        parse_matrix([[True]], "m")


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError):
        load_run(tmp_path / "missing.yaml", "fig1")
    bad = tmp_path / "bad.yaml"
    bad.write_text("kind: [fig1\n")
    with pytest.raises(ConfigError):
        load_run(bad, "fig1")
