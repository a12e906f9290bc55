#include <stdio.h>

int main(void) {
    int arr[8] = {12, 5, 8, 21, 14, 3, 9, 6};
    int n = 8;
    int even_sum = 0;
    int odd_count = 0;
    int i;

    for (i = 0; i < n; i++) {
        if (arr[i] % 2 == 0) {
            even_sum = even_sum + arr[i];
            printf("%d is even\n", arr[i]);
        } else {
            odd_count = odd_count + 1;
            printf("%d is odd\n", arr[i]);
        }
    }
    printf("sum of even elements: %d\n", even_sum);
    printf("count of odd elements: %d\n", odd_count);
    return 0;
}
