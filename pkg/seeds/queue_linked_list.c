#include <stdio.h>
#include <stdlib.h>

struct node {
    int data;
    struct node *next;
};

struct node *front = NULL;
struct node *rear = NULL;

void enqueue(int value) {
    struct node *item = malloc(sizeof(struct node));
    item->data = value;
    item->next = NULL;
    if (rear == NULL) {
        front = item;
        rear = item;
    } else {
        rear->next = item;
        rear = item;
    }
}

int dequeue(void) {
    struct node *item = front;
    int value;
    if (item == NULL) {
        printf("queue empty\n");
        return -1;
    }
    value = item->data;
    front = item->next;
    if (front == NULL) {
        rear = NULL;
    }
    free(item);
    return value;
}

int main(void) {
    int i;
    for (i = 0; i < 6; i++) {
        enqueue(i + 1);
    }
    while (front != NULL) {
        printf("dequeued %d\n", dequeue());
    }
    return 0;
}
