#include <stdio.h>
#include <string.h>
#include <ctype.h>

int shout = 0;

void print_upper(const char *s)
{
    while (*s) {
        putchar(toupper(*s));
        s++;
    }
    putchar('\n');
}

int main(int argc, char **argv)
{
    const char *note = "empty note";
    int show_stats = 0;
    int i;
    for (i = 1; i < argc; i++) {
        if (strcmp(argv[i], "--stats") == 0) {
            show_stats = 1;
        } else if (strcmp(argv[i], "--shout") == 0) {
            shout = 1;
        } else {
            note = argv[i];
        }
    }
#ifdef TRACE
    fprintf(stderr, "trace: %d args\n", argc);
#endif
    if (shout) {
        print_upper(note);
    } else {
        printf("note: %s\n", note);
    }
    if (show_stats) {
        printf("length: %zu\n", strlen(note));
        /*@transplant:report_words*/
    }
    return 0;
}
