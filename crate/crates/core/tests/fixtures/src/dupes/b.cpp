extern "C" int puts(const char *s);

void f() {
    puts("from b");
}

int main() {
    f();
    return 0;
}
