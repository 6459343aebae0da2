#include <cstdio>

static long long seen[1001];

int main() {
    int n;
    scanf("%d", &n);
    long long c = 0;
    for (int i = 0; i < n; ++i) {
        int x;
        scanf("%d", &x);
        if (x >= 0 && x <= 1000) {
            c += seen[1000 - x];
            ++seen[x];
        }
    }
    printf("%lld\n", c);
    return 0;
}
