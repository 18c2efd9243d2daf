#include "buf.h"

int render(const char *s);
