"""Experiment-file parsing, validation, and object construction."""

import numpy as np
import pytest

from dpobstacle.config import (
    ExperimentConfig,
    build_mesh,
    build_problem,
    build_schedule,
    build_solver_config,
    output_parameters,
    parse_config_text,
    study_parameters,
    vi_tolerance,
)
from dpobstacle.errors import ConfigFileError, ConfigurationError

BASIC = """\
[mesh]
dim = 1
n = 8

[phase]
p = 2
q = 3
mu = 0.5
"""

CONTACT = """\
[mesh]
dim = 1
n = 16

[phase]
p = 2
q = 2

[obstacle]
phi = 0.1

[reaction]
name = constant
value = 1

[solver]
schedule = 1, 1e-2, 1e-4
"""


class TestParsing:
    def test_minimal_file(self):
        cfg = parse_config_text(BASIC)
        assert cfg.get("mesh", "dim") == "1"
        assert cfg.get("phase", "mu") == "0.5"
        assert cfg.get("solver", "schedule") is None

    def test_round_trip_through_serialize(self):
        cfg = parse_config_text(CONTACT)
        again = parse_config_text(cfg.serialize())
        assert again == cfg
        assert again.serialize() == cfg.serialize()

    def test_unknown_section(self):
        with pytest.raises(ConfigFileError) as err:
            parse_config_text(BASIC + "\n[forcing]\nf = 1\n")
        assert "line" in str(err.value)

    def test_unknown_key(self):
        with pytest.raises(ConfigFileError) as err:
            parse_config_text(BASIC.replace("mu = 0.5", "nu = 0.5"))
        assert "nu" in str(err.value)

    def test_duplicate_key(self):
        with pytest.raises(ConfigFileError) as err:
            parse_config_text(BASIC + "p = 4\n")
        assert "line 8" in str(err.value) or "duplicate" in str(err.value)

    def test_key_before_any_section(self):
        with pytest.raises(ConfigFileError):
            parse_config_text("dim = 1\n" + BASIC)

    def test_missing_required_section(self):
        with pytest.raises(ConfigFileError):
            parse_config_text("[mesh]\ndim = 1\nn = 4\n")

    def test_comments_and_blank_lines_ignored(self):
        text = "# heading\n\n" + BASIC + "# trailing\n"
        cfg = parse_config_text(text)
        assert cfg.get("mesh", "n") == "8"

    def test_line_numbers_recorded(self):
        cfg = parse_config_text(BASIC)
        assert cfg.line_of("mesh", "dim") == 2
        assert cfg.line_of("phase", "mu") == 8


class TestBuildMesh:
    def test_interval(self):
        mesh = build_mesh(parse_config_text(BASIC))
        assert mesh.dim == 1 and mesh.n_elements == 8

    def test_rectangle_with_sides(self):
        text = """\
[mesh]
dim = 2
lx = 1
ly = 1
nx = 2
ny = 2
gamma2 = bottom, top

[phase]
p = 2
q = 2
"""
        mesh = build_mesh(parse_config_text(text))
        assert mesh.dim == 2
        ys = mesh.nodes[mesh.gamma2_nodes, 1]
        assert set(np.round(ys, 12)) == {0.0, 1.0}

    def test_unknown_side_reports_key(self):
        bad = BASIC.replace("n = 8", "n = 8\ngamma2 = rear")
        with pytest.raises(ConfigFileError) as err:
            build_mesh(parse_config_text(bad))
        assert "gamma2" in str(err.value) or "rear" in str(err.value)

    def test_missing_cell_count(self):
        with pytest.raises(ConfigFileError):
            build_mesh(parse_config_text(BASIC.replace("n = 8\n", "")))


class TestBuildProblem:
    def test_defaults(self):
        spec = build_problem(parse_config_text(BASIC))
        assert spec.phase.p == 2.0 and spec.phase.q == 3.0
        assert np.all(spec.phase.mu == 0.5)
        assert np.all(np.isposinf(spec.obstacle.values))
        assert spec.reaction.name == "constant"
        assert spec.boundary.name == "zero"
        assert spec.eps_grad == 0.0

    def test_expression_obstacle_and_weight(self):
        text = BASIC.replace("mu = 0.5", "mu = 0.5 + 0.25*sin(3*x)")
        text += "\n[obstacle]\nphi = 0.1 + 0.05*x\n"
        spec = build_problem(parse_config_text(text))
        xs = spec.mesh.nodes[:, 0]
        assert np.allclose(spec.obstacle.values, 0.1 + 0.05 * xs)

    def test_y_in_one_dimensional_file_rejected(self):
        text = BASIC + "\n[obstacle]\nphi = 0.1 + y\n"
        with pytest.raises(ConfigFileError) as err:
            build_problem(parse_config_text(text))
        assert "y" in str(err.value)

    def test_negative_obstacle_anchored_to_key(self):
        text = BASIC + "\n[obstacle]\nphi = 0-1\n"
        with pytest.raises(ConfigFileError) as err:
            build_problem(parse_config_text(text))
        assert "phi" in str(err.value) or "nonnegative" in str(err.value)

    def test_power_literal_in_scalar_slot(self):
        text = BASIC.replace("mu = 0.5", "mu = 2^-3")
        spec = build_problem(parse_config_text(text))
        assert np.all(spec.phase.mu == 0.125)

    def test_variable_in_scalar_slot_rejected(self):
        text = BASIC.replace("q = 3", "q = 3 + x")
        with pytest.raises(ConfigFileError):
            build_problem(parse_config_text(text))

    def test_sub_quadratic_exponent_defaults_to_regularized(self):
        text = BASIC.replace("p = 2", "p = 1.5")
        spec = build_problem(parse_config_text(text))
        assert spec.eps_grad == 1e-8
        bad = text + "\n[solver]\neps_grad = 0\n"
        with pytest.raises(ConfigFileError) as err:
            build_problem(parse_config_text(bad))
        assert "eps_grad" in str(err.value)

    def test_reaction_and_boundary_sections(self):
        spec = build_problem(parse_config_text(CONTACT))
        assert spec.reaction.name == "constant"
        assert dict(spec.reaction.params)["value"] == 1.0

    def test_blend_rule(self):
        text = CONTACT.replace("name = constant\nvalue = 1",
                               "name = interval\nlo = 0\nhi = 1\n"
                               "selection = blend\nblend = 0.25")
        spec = build_problem(parse_config_text(text))
        assert spec.reaction.rule == "blend"
        assert spec.reaction.blend == 0.25


class TestBuildSchedule:
    def test_default_decades(self):
        schedule = build_schedule(parse_config_text(BASIC))
        assert schedule == [10.0 ** -k for k in range(9)]

    def test_explicit(self):
        schedule = build_schedule(parse_config_text(CONTACT))
        assert schedule == [1.0, 1e-2, 1e-4]

    @pytest.mark.parametrize("bad,frag", [
        ("schedule = 1, 2", "decreasing"),
        ("schedule = 1, 0", "positive"),
        ("schedule = 1, -0.5", "positive"),
        ("schedule =", "empty"),
        ("schedule = 1, apple", "apple"),
    ])
    def test_validation_names_key(self, bad, frag):
        text = CONTACT.replace("schedule = 1, 1e-2, 1e-4", bad)
        with pytest.raises(ConfigFileError) as err:
            build_schedule(parse_config_text(text))
        msg = str(err.value)
        assert "schedule" in msg
        assert frag in msg

    def test_nonpositive_rho_error_carries_line_number(self):
        text = CONTACT.replace("schedule = 1, 1e-2, 1e-4",
                               "schedule = 1, 1e-2, 0")
        with pytest.raises(ConfigFileError) as err:
            build_schedule(parse_config_text(text))
        assert err.value.line is not None


class TestBuildSolverConfig:
    def test_defaults_and_rho_from_schedule(self):
        cfg = build_solver_config(parse_config_text(CONTACT))
        assert cfg.rho == 1.0
        assert cfg.mode == "penalty"
        assert cfg.newton_tol == 1e-10
        assert cfg.max_newton == 100

    def test_mode_choice_validated(self):
        text = CONTACT + "mode = explicit\n"
        with pytest.raises(ConfigFileError):
            build_solver_config(parse_config_text(text))

    def test_negative_tolerance_rejected(self):
        text = CONTACT + "newton_tol = -1\n"
        with pytest.raises(ConfigFileError):
            build_solver_config(parse_config_text(text))


class TestStudyParameters:
    def test_defaults(self):
        params = study_parameters(parse_config_text(BASIC))
        assert params["n_starts"] >= 1
        assert params["seed"] == int(params["seed"])
        assert "vi_tol" not in params
        assert params["n_random_probes"] == 32

    def test_selection_rules_parsed(self):
        text = BASIC + ("\n[study]\nselection_rules = lower, upper, "
                        "blend:0.25\nseed = 7\n")
        params = study_parameters(parse_config_text(text))
        assert params["selection_rules"] == ["lower", "upper",
                                             ("blend", 0.25)]
        assert params["seed"] == 7

    def test_unknown_rule_rejected(self):
        text = BASIC + "\n[study]\nselection_rules = median\n"
        with pytest.raises(ConfigFileError):
            study_parameters(parse_config_text(text))

    def test_vi_tolerance_default(self):
        assert vi_tolerance(parse_config_text(BASIC)) == 1e-8
        text = BASIC + "\n[study]\nvi_tol = 1e-6\n"
        assert vi_tolerance(parse_config_text(text)) == 1e-6


class TestOutputParameters:
    def test_defaults(self):
        out_dir, formats = output_parameters(parse_config_text(BASIC))
        assert "json" in formats and "csv" in formats

    def test_unknown_format_rejected(self):
        text = BASIC + "\n[output]\nformats = json, yaml\n"
        with pytest.raises(ConfigFileError):
            output_parameters(parse_config_text(text))
