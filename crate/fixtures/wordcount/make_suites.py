"""Regenerates tests/ from the host and a hand-written reference product.

The reference is the host with the word count added by hand; its output
is the oracle for the suites that exercise the new feature.
"""
import json
import pathlib
import shutil
import subprocess
import tempfile

HERE = pathlib.Path(__file__).parent
REFERENCE_FEATURE = """
int count_words(const char *text)
{
    int words = 0;
    int in_word = 0;
    for (; *text; text++) {
        int c = isalnum(*text) || *text == '\\'';
        if (c && !in_word) words++;
        in_word = c;
    }
    return words;
}
"""

REGRESSION = [
    [], ["hello"], ["two words"], ["--shout"], ["--shout", "hi there"], ["a", "b"],
    ["last", "wins", "here"], [""], ["  spaced  out  "], ["--shout", ""], ["it's"],
    ["MiXeD CaSe"], ["--shout", "MiXeD CaSe"], ["tab\there"], ["line\nbreak"],
    ["123 456"], ["--shout", "x", "y"], ["x", "--shout", "y"], ["punct!?"],
    ["--shout", "--shout"], ["-"], ["a-b c_d"],
]
PLUS = [["--stats"], ["--stats", "--shout", "shout it"], ["--shout", "one", "--stats"], ["--stats", ""]]
ACCEPTANCE = [["--stats", "one two three"], ["--stats", "don't stop"], ["--stats", "  a  b  "]]
ICEBOX = [["--stats", "x y"], ["alpha", "--stats"], ["--stats", "1 2 3 4 5"]]


def build(src, out, extra=""):
    text = src.read_text()
    if extra:
        text = text.replace("int shout = 0;", extra + "\nint shout = 0;")
        text = text.replace(
            "        /*@transplant:report_words*/",
            '        printf("words: %d\\n", count_words(note));',
        )
    d = pathlib.Path(tempfile.mkdtemp())
    (d / "main.c").write_text(text)
    subprocess.run(["cc", "-o", str(out), str(d / "main.c")], check=True)


def write_suite(kind, name, cases, binary):
    d = HERE / "tests" / name
    shutil.rmtree(d, ignore_errors=True)
    (d / "data").mkdir(parents=True)
    tests = []
    for i, args in enumerate(cases):
        r = subprocess.run([str(binary)] + args, capture_output=True, check=False)
        test = f"{name.replace('+', 'p')}_{i:02d}"
        (d / "data" / f"{test}.out").write_bytes(r.stdout)
        tests.append({"name": test, "args": args, "expected_exit": r.returncode, "expected_stdout": f"data/{test}.out"})
    (d / "suite.json").write_text(json.dumps({"kind": kind, "tests": tests}, indent=2) + "\n")


def main():
    tmp = pathlib.Path(tempfile.mkdtemp())
    build(HERE / "notes" / "main.c", tmp / "host")
    build(HERE / "notes" / "main.c", tmp / "reference", REFERENCE_FEATURE)
    write_suite("regression", "regression", REGRESSION, tmp / "host")
    write_suite("regression++", "regression++", PLUS, tmp / "reference")
    write_suite("acceptance", "acceptance", ACCEPTANCE, tmp / "reference")
    write_suite("icebox", "icebox", ICEBOX, tmp / "reference")


if __name__ == "__main__":
    main()
