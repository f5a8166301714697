"""
Tests for grammar-driven comment stripping.
"""

from pcode_data.comments import resolve_grammar, strip_comments


class TestStripComments:
    """Test cases for comment removal across languages."""

    def test_line_comment(self):
        assert strip_comments("x = 1 // note", "go") == "x = 1 "

    def test_block_comment(self):
        assert strip_comments("/* a */ b", "java") == " b"

    def test_keeps_line_breaks(self):
        code = "a = 1 // one\nb = 2"
        assert strip_comments(code, "java") == "a = 1 \nb = 2"

    def test_markers_inside_strings_survive(self):
        code = 's = "http://x" // url'
        assert strip_comments(code, "javascript") == 's = "http://x" '

    def test_escaped_quote(self):
        code = 's = "a \\" // b" // c'
        assert strip_comments(code, "java") == 's = "a \\" // b" '

    def test_go_raw_string(self):
        code = "s := `a\\` // b"
        assert strip_comments(code, "go") == "s := `a\\` "

    def test_python_hash_and_docstring(self):
        code = 'def f():\n    """keep # this"""\n    return 1  # drop'
        assert strip_comments(code, "python") == 'def f():\n    """keep # this"""\n    return 1  '

    def test_ruby_block(self):
        code = "x = 1\n=begin\nnote\n=end\ny = 2"
        assert strip_comments(code, "ruby") == "x = 1\n\ny = 2"

    def test_solidity(self):
        assert strip_comments("uint x; /// doc\n", "solidity") == "uint x; \n"

    def test_unterminated_block_runs_to_end(self):
        assert strip_comments("a /* never closed", "java") == "a "

    def test_unknown_language_unchanged(self):
        assert strip_comments("x -- y", "cobol") == "x -- y"

    def test_alias_grammar(self):
        assert resolve_grammar("toya") is None
        assert strip_comments("x // y", "toya", {"toya": "java"}) == "x "
