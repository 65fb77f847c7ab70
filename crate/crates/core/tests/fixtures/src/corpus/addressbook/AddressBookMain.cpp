#include "AddressBook.h"

int main() {
    AddressBook book;
    book.display_book();
    return 0;
}
