#include <cstdio>

static int a[20000];

int read() {
    int n;
    if (scanf("%d", &n) != 1) return 0;
    for (int i = 0; i < n; ++i) scanf("%d", &a[i]);
    return n;
}

int main() {
    int n = read();
    long long c = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (a[i] >= a[j]) ++c;
    printf("%lld\n", c);
    return 0;
}
