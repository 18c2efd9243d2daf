#define CAP 16

typedef struct buf
{
    int len;
    char data[CAP];
} buf_t;

void buf_put(buf_t *b, char c);
