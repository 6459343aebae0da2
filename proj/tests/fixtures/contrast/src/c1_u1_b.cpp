#include <cstdio>
#include <cstdlib>

long long a[200000];

int main() {
    int len;
    scanf("%d", &len);
    for (int i = 0; i < len; ++i) scanf("%lld", &a[i]);
    long long m = -1;
    for (int c = 1; c < len; ++c) {
        long long l = 0, r = 0;
        for (int i = 0; i < c; ++i) l += a[i];
        for (int i = c; i < len; ++i) r += a[i];
        long long d = llabs(l - r);
        if (m < 0 || d < m) m = d;
    }
    printf("%lld\n", m);
    return 0;
}
