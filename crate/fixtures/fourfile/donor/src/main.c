#include "../include/render.h"

int main(int argc, char **argv)
{
    if (argc > 1)
        render(argv[1]);
    return 0;
}
