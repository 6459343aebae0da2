#include <cstdio>

static int a[20000];

int read() {
    int n;
    if (scanf("%d", &n) != 1) return 0;
    for (int i = 0; i < n; ++i) scanf("%d", &a[i]);
    return n;
}

volatile long long sink;

int main() {
    int n = read();
    long long c = 0;
    for (int round = 0; round < 3; ++round) {
        c = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (a[i] == a[j]) ++c;
        sink = c;
    }
    printf("%lld\n", c);
    return 0;
}
