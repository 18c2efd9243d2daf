#include <stdio.h>
#include <string.h>

int count_words(const char *text);
int count_lines(const char *text);

void report_words(const char *text)
{
    int n = count_words(text);
    printf("words: %d\n", n);
}

void report_lines(const char *text)
{
    printf("lines: %d\n", count_lines(text));
}

int main(int argc, char **argv)
{
    const char *input = "the quick brown fox";
    int quiet = 0;
    if (argc > 1) {
        input = argv[1];
    }
    if (argc > 2 && strcmp(argv[2], "-q") == 0) {
        quiet = 1;
    }
    if (!quiet) {
        printf("%s\n", input);
    }
    report_words(input);
    report_lines(input);
    return 0;
}
