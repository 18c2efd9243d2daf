//! Names declared by common C library headers. Calls to these become
//! boundary nodes instead of unresolved-symbol errors.

const STDIO: &[&str] = &[
    "printf", "fprintf", "sprintf", "snprintf", "vprintf", "vfprintf", "vsprintf", "vsnprintf", "puts", "fputs",
    "putchar", "fputc", "putc", "getchar", "fgetc", "getc", "fgets", "gets", "ungetc", "scanf", "fscanf", "sscanf",
    "fopen", "fclose", "fflush", "fread", "fwrite", "fseek", "ftell", "rewind", "feof", "ferror", "clearerr",
    "perror", "remove", "rename", "tmpfile", "setvbuf", "setbuf", "stdin", "stdout", "stderr", "EOF", "NULL",
    "FILE", "BUFSIZ", "SEEK_SET", "SEEK_CUR", "SEEK_END", "size_t",
];
const STDLIB: &[&str] = &[
    "malloc", "calloc", "realloc", "free", "exit", "abort", "atexit", "atoi", "atol", "atof", "strtol", "strtoul",
    "strtod", "abs", "labs", "div", "ldiv", "rand", "srand", "qsort", "bsearch", "getenv", "system", "NULL",
    "EXIT_SUCCESS", "EXIT_FAILURE", "RAND_MAX", "size_t",
];
const STRING: &[&str] = &[
    "strlen", "strcpy", "strncpy", "strcat", "strncat", "strcmp", "strncmp", "strchr", "strrchr", "strstr",
    "strspn", "strcspn", "strpbrk", "strtok", "strerror", "memcpy", "memmove", "memset", "memcmp", "memchr",
    "strdup", "NULL", "size_t",
];
const CTYPE: &[&str] = &[
    "isalnum", "isalpha", "isdigit", "islower", "isupper", "isspace", "ispunct", "isprint", "iscntrl",
    "isxdigit", "isgraph", "tolower", "toupper",
];
const MATH: &[&str] = &[
    "sqrt", "pow", "fabs", "floor", "ceil", "sin", "cos", "tan", "exp", "log", "log10", "fmod", "round",
];
const ASSERT: &[&str] = &["assert"];
const ERRNO: &[&str] = &["errno", "EINVAL", "ENOENT", "ERANGE", "EAGAIN"];
const UNISTD: &[&str] = &["read", "write", "close", "isatty", "getpid", "sleep", "usleep", "STDIN_FILENO", "STDOUT_FILENO"];
const LIMITS: &[&str] = &["INT_MAX", "INT_MIN", "CHAR_BIT", "LONG_MAX", "LONG_MIN", "UINT_MAX"];
const STDDEF: &[&str] = &["NULL", "size_t", "offsetof", "ptrdiff_t"];

/// Names known to come from `header`, or `None` for headers not listed,
/// which are then trusted to declare anything.
pub fn header_names(header: &str) -> Option<&'static [&'static str]> {
    Some(match header {
        "stdio.h" => STDIO,
        "stdlib.h" => STDLIB,
        "string.h" => STRING,
        "ctype.h" => CTYPE,
        "math.h" => MATH,
        "assert.h" => ASSERT,
        "errno.h" => ERRNO,
        "unistd.h" => UNISTD,
        "limits.h" => LIMITS,
        "stddef.h" => STDDEF,
        _ => return None,
    })
}

/// Whether any of the given system headers may declare `name`.
pub fn declared_by(headers: &[String], name: &str) -> bool {
    headers.iter().any(|h| match header_names(h) {
        Some(names) => names.contains(&name),
        None => true,
    })
}

/// The first listed header declaring `name`.
pub fn header_of(name: &str) -> Option<&'static str> {
    const ORDER: &[&str] = &[
        "stdio.h", "stdlib.h", "string.h", "ctype.h", "math.h", "assert.h", "errno.h", "unistd.h", "limits.h",
        "stddef.h",
    ];
    ORDER.iter().copied().find(|h| header_names(h).is_some_and(|n| n.contains(&name)))
}
