#include <stdio.h>
#include <stdlib.h>

struct node {
    int data;
    struct node *next;
};

struct node *top = NULL;

void push(int value) {
    struct node *item = malloc(sizeof(struct node));
    item->data = value;
    item->next = top;
    top = item;
}

int pop(void) {
    struct node *item = top;
    int value;
    if (item == NULL) {
        printf("stack underflow\n");
        return -1;
    }
    value = item->data;
    top = item->next;
    free(item);
    return value;
}

int main(void) {
    int i;
    for (i = 1; i <= 5; i++) {
        push(i * 10);
    }
    while (top != NULL) {
        printf("popped %d\n", pop());
    }
    return 0;
}
