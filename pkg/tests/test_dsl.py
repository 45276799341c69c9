import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_ast
from vdsagent import dsl

CLEAN = """\
model closure_transfer
objective minimize total_travel_time
constraints {
  flow_balance all
  remove_edge (6, 7)
  remove_edge (7, 6)
}
"""


class TestParse:
    def test_every_statement_kind(self):
        text = """
        # dispatch model with one of everything
        model kitchen_sink
        objective minimize total_travel_time
        constraints {
          flow_balance all          # mandatory
          remove_edge (6, 7)
          forbid_edge vehicle "AGV-4" (5, 6)
          require_subpath task "T3" [6, 10, 11]
          require_exact_path vehicle "AGV-9" [0, 1, 2]
        }
        """
        ast = dsl.parse(text)
        assert ast.name == "kitchen_sink"
        assert ast.objective == "total_travel_time"
        assert ast.statements == (
            dsl.FlowBalanceAll(),
            dsl.RemoveEdge(6, 7),
            dsl.ForbidEdge(dsl.SubjectRef("vehicle", "AGV-4"), 5, 6),
            dsl.RequireSubpath(dsl.SubjectRef("task", "T3"), (6, 10, 11)),
            dsl.RequireExactPath(dsl.SubjectRef("vehicle", "AGV-9"), (0, 1, 2)),
        )

    def test_empty_constraints_block(self):
        ast = dsl.parse("model m\nobjective minimize total_travel_time\n"
                        "constraints { }")
        assert ast.statements == ()

    def test_comments_and_whitespace_ignored(self):
        squeezed = ("model m#c\nobjective minimize total_travel_time\n"
                    "constraints{flow_balance all}")
        assert dsl.parse(squeezed) == dsl.parse(
            "model m\nobjective  minimize\ttotal_travel_time\n"
            "constraints {\n  flow_balance all  # why not\n}\n")

    def test_error_position_reported(self):
        with pytest.raises(dsl.DslError) as exc:
            dsl.parse("model m\nobjective minimize total_travel_time\n"
                      "constraints {\n  flow_balance some\n}")
        assert exc.value.kind == "parse"
        assert exc.value.line == 4
        assert "expected 'all'" in exc.value.message

    @pytest.mark.parametrize("text,fragment", [
        ("", "expected 'model'"),
        ("model", "expected a model name"),
        ("model m objective minimize makespan", "expected 'total_travel_time'"),
        ("model m objective minimize total_travel_time", "expected 'constraints'"),
        ("model m objective minimize total_travel_time constraints {",
         "expected a statement or '}'"),
        ("model m objective minimize total_travel_time constraints "
         "{ flow_balance all } trailing", "expected end of input"),
        ("model m objective minimize total_travel_time constraints "
         "{ remove_edge (6 7) }", "expected ','"),
        ("model m objective minimize total_travel_time constraints "
         "{ forbid_edge lane \"x\" (1, 2) }", "expected 'vehicle' or 'task'"),
        ("model m objective minimize total_travel_time constraints "
         "{ require_subpath task \"T1\" [6] }", "expected ','"),
        ("model m objective minimize total_travel_time constraints "
         "{ park_vehicle all }", "expected a statement keyword"),
    ])
    def test_parse_failures(self, text, fragment):
        with pytest.raises(dsl.DslError) as exc:
            dsl.parse(text)
        assert exc.value.kind == "parse"
        assert fragment in exc.value.message

    def test_unexpected_character(self):
        with pytest.raises(dsl.DslError) as exc:
            dsl.parse("model m; objective minimize total_travel_time")
        assert "unexpected character" in exc.value.message

    def test_unterminated_string(self):
        with pytest.raises(dsl.DslError):
            dsl.parse('model m objective minimize total_travel_time '
                      'constraints { forbid_edge vehicle "AGV (1, 2) }')

    def test_negative_numbers_are_not_ints(self):
        with pytest.raises(dsl.DslError):
            dsl.parse("model m objective minimize total_travel_time "
                      "constraints { remove_edge (-1, 2) }")


class TestStaticCheck:
    def check(self, text):
        return dsl.static_check(dsl.parse(text))

    def test_clean_program(self):
        assert self.check(CLEAN) == []

    def test_missing_flow_balance(self):
        problems = self.check(
            "model m\nobjective minimize total_travel_time\n"
            "constraints { remove_edge (1, 2) }")
        assert len(problems) == 1
        assert problems[0].kind == "static"
        assert "flow_balance" in problems[0].message

    def test_duplicate_flow_balance(self):
        problems = self.check(
            "model m\nobjective minimize total_travel_time\n"
            "constraints { flow_balance all\nflow_balance all }")
        assert [p.message for p in problems] == \
            ["duplicate 'flow_balance all' statement"]

    def test_duplicate_removal_flagged_directionally(self):
        problems = self.check(
            "model m\nobjective minimize total_travel_time\nconstraints {\n"
            "flow_balance all\nremove_edge (6, 7)\nremove_edge (6, 7)\n}")
        assert [p.message for p in problems] == ["duplicate remove_edge (6, 7)"]
        # opposite direction is not a duplicate
        assert self.check(CLEAN) == []

    def test_conflicting_path_requirements(self):
        problems = self.check(
            'model m\nobjective minimize total_travel_time\nconstraints {\n'
            'flow_balance all\n'
            'require_subpath task "T3" [1, 2]\n'
            'require_exact_path task "T3" [0, 1, 2, 3]\n}')
        assert [p.message for p in problems] == \
            ['conflicting path requirements for task "T3"']

    def test_multiple_same_kind_requirements(self):
        problems = self.check(
            'model m\nobjective minimize total_travel_time\nconstraints {\n'
            'flow_balance all\n'
            'require_subpath task "T3" [1, 2]\n'
            'require_subpath task "T3" [3, 4]\n}')
        assert [p.message for p in problems] == \
            ['multiple path requirements for task "T3"']

    def test_same_ident_different_subject_kind_ok(self):
        problems = self.check(
            'model m\nobjective minimize total_travel_time\nconstraints {\n'
            'flow_balance all\n'
            'require_subpath task "X" [1, 2]\n'
            'require_subpath vehicle "X" [3, 4]\n}')
        assert problems == []

    def test_multiple_problems_in_scan_order(self):
        problems = self.check(
            "model m\nobjective minimize total_travel_time\nconstraints {\n"
            "remove_edge (1, 2)\nremove_edge (1, 2)\n}")
        assert [p.message for p in problems] == [
            "missing required statement 'flow_balance all'",
            "duplicate remove_edge (1, 2)",
        ]


class TestRender:
    def test_canonical_form(self):
        ast = dsl.parse(CLEAN)
        assert dsl.render(ast) == CLEAN

    def test_round_trip_bulk(self):
        rng = random.Random(7)
        for _ in range(2000):
            ast = random_ast(rng)
            assert dsl.parse(dsl.render(ast)) == ast

    @settings(max_examples=200)
    @given(st.randoms(use_true_random=False))
    def test_round_trip_property(self, rng):
        ast = random_ast(rng)
        assert dsl.parse(dsl.render(ast)) == ast


class TestFuzz:
    @settings(max_examples=300)
    @given(st.text(max_size=80))
    def test_parser_never_crashes(self, text):
        try:
            dsl.parse(text)
        except dsl.DslError:
            pass

    def test_grammar_constant_mentions_every_statement(self):
        for word in ("flow_balance", "remove_edge", "forbid_edge",
                     "require_subpath", "require_exact_path", "vehicle",
                     "task", "minimize"):
            assert word in dsl.GRAMMAR


class TestExtraction:
    def test_missing_block(self):
        with pytest.raises(dsl.ExtractionError):
            dsl.extract_dsl_block("some prose without code")
        with pytest.raises(dsl.ExtractionError):
            dsl.extract_dsl_block("```python\nprint('hi')\n```")

    def test_last_block_wins(self):
        text = ("First try:\n```vds-dsl\nmodel a\n```\n"
                "Corrected version:\n```vds-dsl\nmodel b\n```\n")
        assert dsl.extract_dsl_block(text) == "model b\n"

    def test_tag_with_trailing_spaces(self):
        assert dsl.extract_dsl_block("```vds-dsl  \nbody\n```") == "body\n"

    def test_round_trip_through_fence(self):
        block = f"answer below\n```vds-dsl\n{CLEAN}```"
        assert dsl.parse(dsl.extract_dsl_block(block)) == dsl.parse(CLEAN)
