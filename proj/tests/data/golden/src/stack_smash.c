#include <string.h>

void fill(char* dst, const char* src) {
    strcpy(dst, src);
}

int main(void) {
    char buf[8];
    fill(buf, "AAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAA");
    return buf[0];
}
