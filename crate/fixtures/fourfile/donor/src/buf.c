#include "../include/buf.h"

void buf_put(buf_t *b, char c)
{
    if (b->len < CAP)
        b->data[b->len++] = c;
}
