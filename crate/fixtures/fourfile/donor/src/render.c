#include <stdio.h>
#include "../include/render.h"

static int width = 8;

int render(const char *s)
{
    buf_t b;
    b.len = 0;
    while (*s)
        buf_put(&b, *s++);
    printf("%.*s|%d\n", b.len, b.data, width);
    return b.len;
}
