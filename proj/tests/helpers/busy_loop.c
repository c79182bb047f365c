/* Spins a core for S seconds. */
#include <stdlib.h>
#include <time.h>

int main(int argc, char **argv) {
    int secs = argc > 1 ? atoi(argv[1]) : 5;
    time_t end = time(NULL) + secs;
    volatile unsigned long n = 0;
    while (time(NULL) < end) n += 1;
    return (int)(n & 1);
}
