#include <ctype.h>

int is_word_char(int c)
{
    return isalnum(c) || c == '\'';
}

int count_words(const char *text)
{
    int words = 0;
    int in_word = 0;
    while (*text) {
        if (is_word_char(*text)) {
            if (!in_word) {
                words++;
            }
            in_word = 1;
        } else {
            in_word = 0;
        }
        text++;
    }
    return words;
}

int count_lines(const char *text)
{
    int lines = 0;
    while (*text) {
        if (*text == '\n') {
            lines++;
        }
        text++;
    }
    return lines;
}
